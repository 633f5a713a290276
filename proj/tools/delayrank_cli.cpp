// delayrank: synthesize, corrupt and reconstruct signals with the smooth
// rank-1 delay-embedding model and the QV / spline / OMP baselines.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 solver
// failure on every segment.

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "delayrank/als_solver.hpp"
#include "delayrank/baselines.hpp"
#include "delayrank/corruption.hpp"
#include "delayrank/errors.hpp"
#include "delayrank/experiment.hpp"
#include "delayrank/signals.hpp"
#include "delayrank/wav.hpp"

namespace dr = delayrank;

namespace {

enum ExitCode : int { kOk = 0, kConfig = 1, kIo = 2, kSolver = 3 };

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SignalOptions {
  std::string kind = "sine";
  dr::SignalSpec spec;

  void add(CLI::App& app) {
    app.add_option("--signal", kind, "Synthetic signal kind")
        ->check(CLI::IsMember({"sine", "wavelet", "chirp"}));
    app.add_option("--length", spec.n, "Signal length in samples")->capture_default_str();
    app.add_option("--amplitude", spec.amplitude)->capture_default_str();
    app.add_option("--frequency", spec.frequency, "Carrier frequency, cycles per sample")
        ->capture_default_str();
    app.add_option("--phase", spec.phase, "Phase offset in radians")->capture_default_str();
    app.add_option("--center", spec.center, "Wavelet center sample (default: middle)");
    app.add_option("--width", spec.width, "Wavelet envelope standard deviation; inf for none")
        ->capture_default_str();
    app.add_option("--chirp-start", spec.chirp_start)->capture_default_str();
    app.add_option("--chirp-rate", spec.chirp_rate)->capture_default_str();
  }

  dr::SignalSpec resolve() const {
    auto s = spec;
    s.kind = kind == "wavelet" ? dr::SignalKind::wavelet
             : kind == "chirp" ? dr::SignalKind::chirp
                               : dr::SignalKind::sine;
    s.validate();
    return s;
  }
};

struct MethodOptions {
  dr::MethodParams params;
  std::string methods = "proposed";

  void add(CLI::App& app, bool with_method_list) {
    if (with_method_list) {
      app.add_option("--methods", methods, "Comma-separated list of proposed, qv, spline, omp")
          ->capture_default_str();
    }
    app.add_option("--tau", params.tau, "Embedding window")->capture_default_str();
    app.add_option("--lambda1", params.lambda1, "Smoothness weight of the long factor")->capture_default_str();
    app.add_option("--lambda2", params.lambda2, "Smoothness weight of the short factor")->capture_default_str();
    app.add_option("--restarts", params.restarts, "Monte-Carlo restarts K")->capture_default_str();
    app.add_option("--max-iters", params.max_outer_iters, "ALS iterations per restart")->capture_default_str();
    app.add_option("--tol", params.outer_tol, "Relative objective change to stop")->capture_default_str();
    app.add_option("--qv-lambda", params.qv_lambda)->capture_default_str();
    app.add_option("--omp-epsilon", params.omp_epsilon)->capture_default_str();
    app.add_option("--omp-redundancy", params.omp_redundancy)->capture_default_str();
  }

  std::vector<dr::Method> method_list() const {
    std::vector<dr::Method> out;
    std::stringstream in(methods);
    for (std::string name; std::getline(in, name, ',');) {
      if (!name.empty()) out.push_back(dr::parse_method(name));
    }
    return out;
  }
};

struct InputOptions {
  std::string wav;
  SignalOptions signal;
  dr::Index segment = 128;
  double min_rms = 0.05;
  std::size_t max_segments = 100;
  bool no_normalize = false;
  std::string corruption;

  void add(CLI::App& app) {
    app.add_option("--in", wav, "Input WAV file (otherwise a synthetic signal)");
    signal.add(app);
    app.add_option("--segment", segment, "Segment length; 0 keeps a synthetic signal whole")
        ->capture_default_str();
    app.add_option("--min-rms", min_rms, "Skip segments quieter than this RMS")->capture_default_str();
    app.add_option("--max-segments", max_segments)->capture_default_str();
    app.add_flag("--no-normalize", no_normalize, "Keep WAV segments at their recorded level");
    app.add_option("--corruption", corruption, "clip:<c>, missing:<rate> or noise:<std>")->required();
  }

  dr::ExperimentConfig config(const MethodOptions& m, std::uint64_t seed) const {
    dr::ExperimentConfig cfg;
    cfg.input_wav = wav;
    if (wav.empty()) cfg.synthetic = signal.resolve();
    cfg.segment_length = segment;
    cfg.min_rms = min_rms;
    cfg.max_segments = max_segments;
    cfg.normalize_segments = !no_normalize;
    cfg.corruption = dr::CorruptionSpec::parse(corruption);
    cfg.methods = m.method_list();
    cfg.params = m.params;
    cfg.seed = seed;
    return cfg;
  }
};

// Mask files: header "index,observed" then one 0/1 row per sample.
void write_mask(const std::string& path, const dr::ObservationMask& mask) {
  std::ostringstream out;
  out << "index,observed\n";
  for (dr::Index i = 0; i < mask.size(); ++i) out << i << ',' << (mask(i) ? 1 : 0) << '\n';
  dr::write_text(path, out.str());
}

dr::ObservationMask read_mask(const std::string& path, dr::Index expected) {
  std::istringstream in(dr::read_text(path));
  std::string line;
  std::getline(in, line);
  if (line != "index,observed") throw dr::IoError(path + ": expected header 'index,observed'");
  dr::ObservationMask::Flags flags = dr::ObservationMask::Flags::Zero(expected);
  dr::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw dr::IoError(path + ": malformed row '" + line + "'");
    long long index = -1;
    const auto parsed = std::from_chars(line.data(), line.data() + comma, index);
    const std::string value = line.substr(comma + 1);
    if (parsed.ec != std::errc() || parsed.ptr != line.data() + comma || index != rows ||
        index >= expected || (value != "0" && value != "1")) {
      throw dr::IoError(path + ": malformed row '" + line + "'");
    }
    flags(rows++) = value == "1";
  }
  if (rows != expected) {
    throw dr::IoError(path + ": " + std::to_string(rows) + " rows for a " + std::to_string(expected) +
                      "-sample signal");
  }
  return dr::ObservationMask(flags);
}

void print_aggregate(const std::vector<dr::AggregateRow>& rows) {
  for (const auto& a : rows) {
    std::cout << dr::to_string(a.method) << "\t" << a.corruption << "\tSNR " << a.mean_snr_db << " +- "
              << a.std_snr_db << " dB\tn=" << a.count;
    if (a.failures) std::cout << " failed=" << a.failures;
    std::cout << '\n';
  }
}

// ---------------------------------------------------------------------------

struct SynthCommand {
  SignalOptions signal;
  std::string out;
  std::uint32_t rate = 16000;
  std::string format = "float32";

  void add(CLI::App& app) {
    signal.add(app);
    app.add_option("--out", out, "Output WAV")->required();
    app.add_option("--rate", rate, "Sample rate written to the header")->capture_default_str();
    app.add_option("--format", format)->check(CLI::IsMember({"pcm16", "pcm24", "float32"}))->capture_default_str();
  }

  int run() const {
    const auto x = dr::generate(signal.resolve());
    const auto f = format == "pcm16" ? dr::SampleFormat::pcm16
                   : format == "pcm24" ? dr::SampleFormat::pcm24
                                       : dr::SampleFormat::float32;
    dr::write_wav(out, x, rate, f);
    return kOk;
  }
};

struct CorruptCommand {
  std::string in;
  std::string corruption;
  std::string out;
  std::string mask_out;

  void add(CLI::App& app) {
    app.add_option("--in", in, "Clean WAV")->required();
    app.add_option("--corruption", corruption, "clip:<c>, missing:<rate> or noise:<std>")->required();
    app.add_option("--out", out, "Corrupted WAV (32-bit float)")->required();
    app.add_option("--mask-out", mask_out, "Observation mask CSV")->required();
  }

  int run(std::uint64_t seed) const {
    auto spec = dr::CorruptionSpec::parse(corruption);
    spec.rng_seed = seed;
    const auto wav = dr::load_wav(in);
    const auto c = dr::corrupt(wav.samples, spec);
    dr::write_wav(out, c.y, wav.sample_rate, dr::SampleFormat::float32);
    write_mask(mask_out, c.mask);
    std::cout << c.mask.count() << " of " << c.mask.size() << " samples observed\n";
    return kOk;
  }
};

struct ReconstructCommand {
  std::string in;
  std::string mask;
  std::string out;
  std::string method = "proposed";
  std::string trajectory;
  dr::Index segment = 0;
  MethodOptions options;

  void add(CLI::App& app) {
    app.add_option("--in", in, "Corrupted WAV")->required();
    app.add_option("--mask", mask, "Observation mask CSV from `corrupt`")->required();
    app.add_option("--out", out, "Reconstructed WAV (32-bit float)")->required();
    app.add_option("--method", method)->check(CLI::IsMember({"proposed", "qv", "spline", "omp"}))->capture_default_str();
    app.add_option("--segment", segment, "Process in blocks of this length; 0 for one block")
        ->capture_default_str();
    app.add_option("--trajectory", trajectory, "Objective trajectory CSV (proposed only)");
    options.add(app, false);
  }

  int run(std::uint64_t seed) const {
    const auto wav = dr::load_wav(in);
    const auto observed = read_mask(mask, wav.samples.size());
    const dr::Index n = wav.samples.size();
    const dr::Index block = segment > 0 ? std::min(segment, n) : n;

    dr::ExperimentConfig cfg;
    cfg.synthetic = dr::SignalSpec{};
    cfg.methods = {dr::parse_method(method)};
    cfg.params = options.params;
    cfg.seed = seed;
    cfg.validate();

    Eigen::VectorXd x = wav.samples;
    std::vector<dr::TrajectoryPoint> points;
    std::size_t failures = 0;
    std::size_t blocks = 0;
    for (dr::Index start = 0; start < n; start += block, ++blocks) {
      const dr::Index len = std::min(block, n - start);
      const Eigen::VectorXd y = wav.samples.segment(start, len);
      const dr::ObservationMask m(observed.flags().segment(start, len));
      try {
        x.segment(start, len) = reconstruct_block(y, m, cfg, blocks, points);
      } catch (const dr::DegenerateModelError& e) {
        ++failures;
        std::cerr << "block " << blocks << ": " << e.what() << '\n';
      } catch (const dr::SingularSystemError& e) {
        ++failures;
        std::cerr << "block " << blocks << ": " << e.what() << '\n';
      }
    }
    dr::write_wav(out, x, wav.sample_rate, dr::SampleFormat::float32);
    if (!trajectory.empty()) dr::write_text(trajectory, dr::trajectory_csv(points));
    if (failures == blocks) throw SolverFailure("reconstruction failed on every block");
    return kOk;
  }

  static Eigen::VectorXd reconstruct_block(const Eigen::VectorXd& y, const dr::ObservationMask& mask,
                                           const dr::ExperimentConfig& cfg, std::size_t index,
                                           std::vector<dr::TrajectoryPoint>& points) {
    const auto& p = cfg.params;
    switch (cfg.methods.front()) {
      case dr::Method::qv:
        return dr::qv_reconstruct(y, mask, p.qv_lambda);
      case dr::Method::spline:
        return dr::spline_reconstruct(y, mask);
      case dr::Method::omp:
        return dr::omp_reconstruct(y, mask, dr::GaborDictionary(y.size(), p.omp_redundancy), p.omp_epsilon).signal;
      case dr::Method::proposed:
        break;
    }
    const auto hp = dr::scale_hyperparameters(p.lambda1, p.lambda2, mask, dr::EmbeddingGeometry(y.size(), p.tau));
    dr::SolverConfig solver;
    solver.restarts_k = p.restarts;
    solver.max_outer_iters = p.max_outer_iters;
    solver.outer_tol = p.outer_tol;
    solver.rng_seed = cfg.seed + index;
    const auto report = dr::monte_carlo_solve(y, mask, hp, solver);
    for (const auto& r : report.restarts) {
      for (std::size_t it = 0; it < r.objective_trajectory.size(); ++it) {
        points.push_back({index, r.index, static_cast<int>(it), r.objective_trajectory[it]});
      }
    }
    return dr::reconstruct(report.final_model);
  }
};

struct BenchCommand {
  InputOptions input;
  MethodOptions options;
  std::string out;
  bool runtime = false;

  void add(CLI::App& app) {
    input.add(app);
    options.methods = "proposed,qv,spline,omp";
    options.add(app, true);
    app.add_option("--out", out, "Output directory")->required();
    app.add_flag("--record-runtime", runtime, "Add a runtime_ms column to results.csv");
  }

  int run(std::uint64_t seed) const {
    auto cfg = input.config(options, seed);
    cfg.record_runtime = runtime;
    cfg.validate();
    const auto result = dr::run_experiment(cfg);
    if (result.rows.empty()) throw dr::ParameterError("no segment passed the RMS threshold");
    dr::write_experiment_outputs(cfg, result, out);
    print_aggregate(dr::aggregate(result.rows));
    for (const auto& r : result.rows) {
      if (r.ok()) return kOk;
    }
    throw SolverFailure("every segment failed");
  }
};

struct SweepCommand {
  InputOptions input;
  MethodOptions options;
  std::vector<dr::Index> taus{8, 16, 32, 64, 128, 256};
  std::vector<double> lambdas{0.001, 0.01, 0.1, 1.0, 10.0};
  std::string out;

  void add(CLI::App& app) {
    input.add(app);
    options.add(app, false);
    app.add_option("--taus", taus, "Embedding windows")->delimiter(',')->capture_default_str();
    app.add_option("--lambdas", lambdas, "Values for both smoothness weights")->delimiter(',')->capture_default_str();
    app.add_option("--out", out, "Sweep CSV")->required();
  }

  int run(std::uint64_t seed) const {
    auto cfg = input.config(options, seed);
    cfg.methods = {dr::Method::proposed};
    cfg.validate();
    const auto cells = dr::sweep(cfg, taus, lambdas);
    dr::write_text(out, dr::sweep_csv(cells));
    for (const auto& c : cells) {
      if (c.summary.count > 0) return kOk;
    }
    throw SolverFailure("every sweep cell failed");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smooth rank-1 delay-embedding reconstruction of clipped and incomplete signals"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for every random draw")->capture_default_str();

  SynthCommand synth;
  CorruptCommand corrupt;
  ReconstructCommand reconstruct;
  BenchCommand bench;
  SweepCommand sweep;
  auto* synth_app = app.add_subcommand("synth", "Write a synthetic test signal");
  auto* corrupt_app = app.add_subcommand("corrupt", "Clip, drop or add noise to a WAV");
  auto* reconstruct_app = app.add_subcommand("reconstruct", "Restore a corrupted WAV from its mask");
  auto* bench_app = app.add_subcommand("bench", "Corrupt-and-reconstruct benchmark over segments");
  auto* sweep_app = app.add_subcommand("sweep", "Grid over tau and both smoothness weights");
  synth.add(*synth_app);
  corrupt.add(*corrupt_app);
  reconstruct.add(*reconstruct_app);
  bench.add(*bench_app);
  sweep.add(*sweep_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*synth_app) return synth.run();
    if (*corrupt_app) return corrupt.run(seed);
    if (*reconstruct_app) return reconstruct.run(seed);
    if (*bench_app) return bench.run(seed);
    if (*sweep_app) return sweep.run(seed);
  } catch (const dr::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const SolverFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
  return kConfig;
}
