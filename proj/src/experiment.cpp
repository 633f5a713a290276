#include "delayrank/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "delayrank/als_solver.hpp"
#include "delayrank/baselines.hpp"
#include "delayrank/wav.hpp"

namespace delayrank {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// splitmix64 finalizer; decorrelates per-segment streams from one seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (a + 1) + 0xBF58476D1CE4E5B9ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string sanitize(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

double parse_double(const std::string& field) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw IoError("CSV field '" + field + "' is not a number");
  }
  return v;
}

long long parse_integer(const std::string& field) {
  long long v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw IoError("CSV field '" + field + "' is not an integer");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

struct MeanStd {
  double mean = kNaN;
  double std = kNaN;
};

// Sample standard deviation; zero for a single value.
MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) {
    out.std = 0.0;
    return out;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / (n - 1.0));
  return out;
}

struct MethodOutput {
  Eigen::VectorXd signal;
  double objective = kNaN;
  int restart = -1;
};

MethodOutput reconstruct_with(Method method, const Corrupted& observed, const MethodParams& p,
                              std::uint64_t seed, std::size_t segment,
                              std::vector<TrajectoryPoint>& trajectories) {
  switch (method) {
    case Method::qv:
      return {qv_reconstruct(observed.y, observed.mask, p.qv_lambda)};
    case Method::spline:
      return {spline_reconstruct(observed.y, observed.mask)};
    case Method::omp: {
      const GaborDictionary dict(observed.y.size(), p.omp_redundancy);
      return {omp_reconstruct(observed.y, observed.mask, dict, p.omp_epsilon).signal};
    }
    case Method::proposed: {
      const EmbeddingGeometry geom(observed.y.size(), p.tau);
      const auto hp = scale_hyperparameters(p.lambda1, p.lambda2, observed.mask, geom);
      SolverConfig solver;
      solver.restarts_k = p.restarts;
      solver.max_outer_iters = p.max_outer_iters;
      solver.outer_tol = p.outer_tol;
      solver.rng_seed = seed;
      const auto report = monte_carlo_solve(observed.y, observed.mask, hp, solver);
      for (const auto& run : report.restarts) {
        for (std::size_t it = 0; it < run.objective_trajectory.size(); ++it) {
          trajectories.push_back({segment, run.index, static_cast<int>(it), run.objective_trajectory[it]});
        }
      }
      return {reconstruct(report.final_model), report.final_objective(), report.restart_index};
    }
  }
  throw ParameterError("unknown method");
}

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::proposed:
      return "proposed";
    case Method::qv:
      return "qv";
    case Method::spline:
      return "spline";
    case Method::omp:
      return "omp";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::proposed, Method::qv, Method::spline, Method::omp}) {
    if (name == to_string(m)) return m;
  }
  throw ParameterError("unknown method '" + name + "' (proposed, qv, spline, omp)");
}

void ExperimentConfig::validate() const {
  if (input_wav.empty() && !synthetic) throw ParameterError("experiment needs a WAV input or a synthetic signal");
  if (synthetic) synthetic->validate();
  if (segment_length != 0 && segment_length < 2) throw ParameterError("segment length must be >= 2");
  if (input_wav.size() > 0 && segment_length == 0) throw ParameterError("WAV input needs a segment length");
  if (!(min_rms >= 0.0)) throw ParameterError("min_rms must be >= 0");
  if (max_segments == 0) throw ParameterError("max_segments must be >= 1");
  if (methods.empty()) throw ParameterError("no reconstruction method selected");
  corruption.validate();
  if (params.tau < 1) throw ParameterError("tau must be >= 1");
  if (!(params.lambda1 >= 0.0) || !(params.lambda2 >= 0.0)) throw ParameterError("lambda must be >= 0");
  if (params.restarts < 1) throw ParameterError("restarts must be >= 1");
  if (params.max_outer_iters < 1) throw ParameterError("max_outer_iters must be >= 1");
  if (!(params.outer_tol > 0.0)) throw ParameterError("outer_tol must be > 0");
  if (!(params.qv_lambda >= 0.0)) throw ParameterError("qv lambda must be >= 0");
  if (!(params.omp_epsilon > 0.0)) throw ParameterError("omp epsilon must be > 0");
}

std::vector<Eigen::VectorXd> extract_segments(const Eigen::VectorXd& signal, Index length,
                                              double min_rms, std::size_t max_count) {
  if (length < 1) throw ParameterError("segment length must be >= 1");
  if (length > signal.size()) throw DimensionError("segment length exceeds signal length");
  std::vector<Eigen::VectorXd> out;
  for (Index start = 0; start + length <= signal.size() && out.size() < max_count; start += length) {
    const auto window = signal.segment(start, length);
    const double rms = std::sqrt(window.squaredNorm() / static_cast<double>(length));
    if (rms >= min_rms) out.emplace_back(window);
  }
  return out;
}

std::vector<Eigen::VectorXd> load_segments(const ExperimentConfig& config, std::uint32_t* sample_rate) {
  config.validate();
  Eigen::VectorXd signal;
  std::uint32_t rate = 16000;
  if (!config.input_wav.empty()) {
    auto wav = load_wav(config.input_wav);
    signal = std::move(wav.samples);
    rate = wav.sample_rate;
  } else {
    signal = generate(*config.synthetic);
  }
  if (sample_rate) *sample_rate = rate;
  if (config.segment_length == 0 || (config.input_wav.empty() && config.segment_length >= signal.size())) {
    return {signal};
  }
  auto segments = extract_segments(signal, config.segment_length, config.min_rms, config.max_segments);
  if (!config.input_wav.empty() && config.normalize_segments) {
    for (auto& s : segments) {
      const double peak = s.cwiseAbs().maxCoeff();
      if (peak > 0.0) s /= peak;
    }
  }
  return segments;
}

ExperimentResult run_on_segments(const ExperimentConfig& config,
                                 const std::vector<Eigen::VectorXd>& segments,
                                 std::uint32_t sample_rate) {
  config.validate();
  std::vector<Method> methods = config.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  ExperimentResult result;
  result.sample_rate = sample_rate;
  for (Method m : methods) result.reconstructions[m] = Eigen::VectorXd();
  std::map<Method, std::vector<Eigen::VectorXd>> pieces;

  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Eigen::VectorXd& clean = segments[s];
    CorruptionSpec spec = config.corruption;
    spec.rng_seed = mix_seed(config.seed, s, 1);
    const Corrupted observed = corrupt(clean, spec);

    for (Method m : methods) {
      ResultRow row;
      row.segment = s;
      row.method = m;
      row.corruption = config.corruption.descriptor();
      row.objective = kNaN;
      const auto start = std::chrono::steady_clock::now();
      Eigen::VectorXd estimate;
      try {
        auto out = reconstruct_with(m, observed, config.params, mix_seed(config.seed, s, 2), s,
                                    result.trajectories);
        estimate = std::move(out.signal);
        row.objective = out.objective;
        row.restart = out.restart;
        row.snr_db = snr_db(clean, estimate);
        row.snr_masked_db = masked_snr_db(clean, estimate, observed.mask);
        row.mse = mse(clean, estimate);
      } catch (const std::exception& e) {
        row.status = sanitize(std::string("error: ") + e.what());
        row.snr_db = row.snr_masked_db = row.mse = kNaN;
        // Failed segments keep the observed signal in the output track.
        estimate = observed.y;
      }
      row.runtime_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      pieces[m].push_back(std::move(estimate));
      result.rows.push_back(std::move(row));
    }
  }

  for (auto& [m, list] : pieces) {
    Index total = 0;
    for (const auto& v : list) total += v.size();
    Eigen::VectorXd joined(total);
    Index at = 0;
    for (const auto& v : list) {
      joined.segment(at, v.size()) = v;
      at += v.size();
    }
    result.reconstructions[m] = std::move(joined);
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  std::uint32_t rate = 16000;
  const auto segments = load_segments(config, &rate);
  return run_on_segments(config, segments, rate);
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<Method, std::string>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) groups[{r.method, r.corruption}].push_back(&r);

  std::vector<AggregateRow> out;
  for (const auto& [key, members] : groups) {
    AggregateRow agg;
    agg.method = std::get<0>(key);
    agg.corruption = std::get<1>(key);
    std::vector<double> snr;
    std::vector<double> err;
    for (const ResultRow* r : members) {
      if (!r->ok()) {
        ++agg.failures;
        continue;
      }
      snr.push_back(r->snr_db);
      err.push_back(r->mse);
    }
    agg.count = snr.size();
    const auto s = mean_std(snr);
    const auto e = mean_std(err);
    agg.mean_snr_db = s.mean;
    agg.std_snr_db = s.std;
    agg.mean_mse = e.mean;
    agg.std_mse = e.std;
    out.push_back(std::move(agg));
  }
  return out;
}

std::vector<SweepCell> sweep(const ExperimentConfig& config, const std::vector<Index>& tau_grid,
                             const std::vector<double>& lambda_grid) {
  if (tau_grid.empty() || lambda_grid.empty()) throw ParameterError("sweep grids must be nonempty");
  std::uint32_t rate = 16000;
  const auto segments = load_segments(config, &rate);

  std::vector<SweepCell> cells;
  cells.reserve(tau_grid.size() * lambda_grid.size() * lambda_grid.size());
  for (Index tau : tau_grid) {
    for (double l1 : lambda_grid) {
      for (double l2 : lambda_grid) {
        ExperimentConfig cell_config = config;
        cell_config.methods = {Method::proposed};
        cell_config.params.tau = tau;
        cell_config.params.lambda1 = l1;
        cell_config.params.lambda2 = l2;
        const auto result = run_on_segments(cell_config, segments, rate);
        SweepCell cell{tau, l1, l2, {}};
        const auto summary = aggregate(result.rows);
        if (!summary.empty()) cell.summary = summary.front();
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string results_csv(const std::vector<ResultRow>& rows, bool with_runtime) {
  std::ostringstream out;
  out << "segment,method,corruption,snr_db,snr_masked_db,mse,objective,restart,status";
  if (with_runtime) out << ",runtime_ms";
  out << '\n';
  for (const auto& r : rows) {
    out << r.segment << ',' << to_string(r.method) << ',' << r.corruption << ','
        << format_number(r.snr_db) << ',' << format_number(r.snr_masked_db) << ','
        << format_number(r.mse) << ',' << format_number(r.objective) << ',' << r.restart << ','
        << sanitize(r.status);
    if (with_runtime) out << ',' << format_number(r.runtime_ms);
    out << '\n';
  }
  return out.str();
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("results CSV is empty");
  const auto header = split(line, ',');
  const bool with_runtime = header.size() == 10 && header.back() == "runtime_ms";
  if (header.size() != 9 && !with_runtime) throw IoError("unexpected results CSV header: " + line);

  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) throw IoError("malformed results CSV row: " + line);
    ResultRow r;
    r.segment = static_cast<std::size_t>(parse_integer(f[0]));
    r.method = parse_method(f[1]);
    r.corruption = f[2];
    r.snr_db = parse_double(f[3]);
    r.snr_masked_db = parse_double(f[4]);
    r.mse = parse_double(f[5]);
    r.objective = parse_double(f[6]);
    r.restart = static_cast<int>(parse_integer(f[7]));
    r.status = f[8];
    r.runtime_ms = with_runtime ? parse_double(f[9]) : 0.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "method,corruption,count,failures,mean_snr_db,std_snr_db,mean_mse,std_mse\n";
  for (const auto& a : rows) {
    out << to_string(a.method) << ',' << a.corruption << ',' << a.count << ',' << a.failures << ','
        << format_number(a.mean_snr_db) << ',' << format_number(a.std_snr_db) << ','
        << format_number(a.mean_mse) << ',' << format_number(a.std_mse) << '\n';
  }
  return out.str();
}

std::string trajectory_csv(const std::vector<TrajectoryPoint>& points) {
  std::ostringstream out;
  out << "segment,restart,iteration,objective\n";
  for (const auto& p : points) {
    out << p.segment << ',' << p.restart << ',' << p.iteration << ',' << format_number(p.objective)
        << '\n';
  }
  return out.str();
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "tau,lambda1,lambda2,count,failures,mean_snr_db,std_snr_db,mean_mse\n";
  for (const auto& c : cells) {
    out << c.tau << ',' << format_number(c.lambda1) << ',' << format_number(c.lambda2) << ','
        << c.summary.count << ',' << c.summary.failures << ',' << format_number(c.summary.mean_snr_db)
        << ',' << format_number(c.summary.std_snr_db) << ',' << format_number(c.summary.mean_mse)
        << '\n';
  }
  return out.str();
}

nlohmann::json manifest(const ExperimentConfig& config) {
  nlohmann::json j;
  j["input_wav"] = config.input_wav;
  if (config.synthetic) {
    const auto& s = *config.synthetic;
    const char* kind = s.kind == SignalKind::sine ? "sine" : s.kind == SignalKind::wavelet ? "wavelet" : "chirp";
    j["synthetic"] = {{"kind", kind},          {"n", s.n},
                      {"amplitude", s.amplitude}, {"frequency", s.frequency},
                      {"phase", s.phase},       {"center", std::isnan(s.center) ? nlohmann::json() : nlohmann::json(s.center)},
                      {"width", std::isinf(s.width) ? nlohmann::json("inf") : nlohmann::json(s.width)},
                      {"chirp_start", s.chirp_start}, {"chirp_rate", s.chirp_rate}};
  }
  j["segment_length"] = config.segment_length;
  j["min_rms"] = config.min_rms;
  j["max_segments"] = config.max_segments;
  j["normalize_segments"] = config.normalize_segments;
  j["corruption"] = config.corruption.descriptor();
  std::vector<std::string> methods;
  for (Method m : config.methods) methods.emplace_back(to_string(m));
  j["methods"] = methods;
  const auto& p = config.params;
  j["params"] = {{"tau", p.tau},
                 {"lambda1", p.lambda1},
                 {"lambda2", p.lambda2},
                 {"restarts", p.restarts},
                 {"max_outer_iters", p.max_outer_iters},
                 {"outer_tol", p.outer_tol},
                 {"qv_lambda", p.qv_lambda},
                 {"omp_epsilon", p.omp_epsilon},
                 {"omp_redundancy", p.omp_redundancy}};
  j["seed"] = config.seed;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result,
                              const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  const fs::path base(dir);
  write_text((base / "results.csv").string(), results_csv(result.rows, config.record_runtime));
  write_text((base / "aggregate.csv").string(), aggregate_csv(aggregate(result.rows)));
  if (result.reconstructions.count(Method::proposed)) {
    write_text((base / "trajectory.csv").string(), trajectory_csv(result.trajectories));
  }
  for (const auto& [m, signal] : result.reconstructions) {
    write_wav((base / ("reconstructed_" + std::string(to_string(m)) + ".wav")).string(), signal,
              result.sample_rate);
  }
  write_text((base / "manifest.json").string(), manifest(config).dump(2) + "\n");
}

}  // namespace delayrank
