#pragma once

// Experiment orchestration: segment extraction, corrupt-and-reconstruct
// benchmarks, hyper-parameter sweeps and their CSV / JSON artifacts.

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "delayrank/corruption.hpp"
#include "delayrank/signals.hpp"

namespace delayrank {

enum class Method { proposed, qv, spline, omp };

const char* to_string(Method method);
Method parse_method(const std::string& name);

struct MethodParams {
  Index tau = 128;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  int restarts = 20;
  int max_outer_iters = 1000;
  double outer_tol = 1e-9;
  double qv_lambda = 0.01;
  double omp_epsilon = 1e-3;
  double omp_redundancy = 2.0;
};

struct ExperimentConfig {
  /// WAV input; when empty, `synthetic` must be set.
  std::string input_wav;
  std::optional<SignalSpec> synthetic;
  /// Segment size; 0 keeps a synthetic signal whole.
  Index segment_length = 128;
  /// Segments quieter than this RMS (full scale = 1) are skipped.
  double min_rms = 0.05;
  std::size_t max_segments = 100;
  /// Scales each WAV segment to unit peak so clip levels are relative.
  bool normalize_segments = true;
  CorruptionSpec corruption;
  std::vector<Method> methods{Method::proposed};
  MethodParams params;
  std::uint64_t seed = 0;
  /// Adds a runtime_ms column to the results CSV (breaks byte-reproducibility).
  bool record_runtime = false;

  void validate() const;
};

struct ResultRow {
  std::size_t segment = 0;
  Method method = Method::proposed;
  std::string corruption;
  double snr_db = 0.0;
  double snr_masked_db = 0.0;
  double mse = 0.0;
  double runtime_ms = 0.0;
  /// Winning restart's final objective and index; NaN / -1 for baselines.
  double objective = 0.0;
  int restart = -1;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

struct TrajectoryPoint {
  std::size_t segment = 0;
  int restart = 0;
  int iteration = 0;
  double objective = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  /// Objective histories of every restart of the proposed method.
  std::vector<TrajectoryPoint> trajectories;
  /// Reconstructed segments concatenated in order, per method.
  std::map<Method, Eigen::VectorXd> reconstructions;
  std::uint32_t sample_rate = 16000;
};

struct AggregateRow {
  Method method = Method::proposed;
  std::string corruption;
  std::size_t count = 0;
  std::size_t failures = 0;
  double mean_snr_db = 0.0;
  double std_snr_db = 0.0;
  double mean_mse = 0.0;
  double std_mse = 0.0;
};

/// Non-overlapping windows with RMS >= min_rms, in temporal order, at most
/// max_count of them.
std::vector<Eigen::VectorXd> extract_segments(const Eigen::VectorXd& signal, Index length,
                                              double min_rms, std::size_t max_count);

/// Loads or synthesizes the input and cuts it into segments.
std::vector<Eigen::VectorXd> load_segments(const ExperimentConfig& config,
                                           std::uint32_t* sample_rate = nullptr);

ExperimentResult run_on_segments(const ExperimentConfig& config,
                                 const std::vector<Eigen::VectorXd>& segments,
                                 std::uint32_t sample_rate = 16000);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Mean and sample standard deviation of SNR and MSE per (method,
/// corruption) over successful rows.
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

struct SweepCell {
  Index tau = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  AggregateRow summary;
};

/// Proposed-method runs for every (tau, lambda1, lambda2) in the grids.
std::vector<SweepCell> sweep(const ExperimentConfig& config, const std::vector<Index>& tau_grid,
                             const std::vector<double>& lambda_grid);

std::string format_number(double value);

std::string results_csv(const std::vector<ResultRow>& rows, bool with_runtime);
std::vector<ResultRow> parse_results_csv(const std::string& text);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string trajectory_csv(const std::vector<TrajectoryPoint>& points);
std::string sweep_csv(const std::vector<SweepCell>& cells);

nlohmann::json manifest(const ExperimentConfig& config);

/// Writes results.csv, aggregate.csv, trajectory.csv (when the proposed
/// method ran), reconstructed_<method>.wav and manifest.json into `dir`.
void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result,
                              const std::string& dir);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace delayrank
