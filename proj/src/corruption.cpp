#include "delayrank/corruption.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace delayrank {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void CorruptionSpec::validate() const {
  switch (kind) {
    case CorruptionKind::clip:
      if (!(clip_level > 0.0)) throw ParameterError("clip level must be > 0");
      break;
    case CorruptionKind::random_missing:
      if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
        throw ParameterError("missing rate must lie in [0, 1)");
      }
      break;
    case CorruptionKind::additive_noise:
      if (!(noise_std >= 0.0)) throw ParameterError("noise std must be >= 0");
      break;
  }
}

std::string CorruptionSpec::descriptor() const {
  switch (kind) {
    case CorruptionKind::clip:
      return "clip:" + format_number(clip_level);
    case CorruptionKind::random_missing:
      return "missing:" + format_number(missing_rate);
    case CorruptionKind::additive_noise:
      return "noise:" + format_number(noise_std);
  }
  return "unknown";
}

CorruptionSpec CorruptionSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ParameterError("corruption '" + text + "' must look like kind:value");
  }
  const std::string kind = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ParameterError("corruption value '" + value + "' is not a number");
  }
  CorruptionSpec spec;
  if (kind == "clip") {
    spec.kind = CorruptionKind::clip;
    spec.clip_level = v;
  } else if (kind == "missing") {
    spec.kind = CorruptionKind::random_missing;
    spec.missing_rate = v;
  } else if (kind == "noise") {
    spec.kind = CorruptionKind::additive_noise;
    spec.noise_std = v;
  } else {
    throw ParameterError("unknown corruption kind '" + kind + "' (clip, missing, noise)");
  }
  spec.validate();
  return spec;
}

Corrupted clip(const Eigen::VectorXd& y0, double c) {
  if (!(c > 0.0)) throw ParameterError("clip level must be > 0");
  ObservationMask::Flags observed = (y0.array() >= -c && y0.array() <= c);
  return {y0.cwiseMax(-c).cwiseMin(c), ObservationMask(std::move(observed))};
}

Corrupted random_missing(const Eigen::VectorXd& y0, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("missing rate must lie in [0, 1)");
  const Index n = y0.size();
  const auto dropped = static_cast<Index>(std::floor(rate * static_cast<double>(n)));
  if (n - dropped < 2) throw ParameterError("missing rate leaves fewer than 2 observed samples");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto engine = make_engine(seed);
  std::shuffle(order.begin(), order.end(), engine);

  ObservationMask::Flags observed = ObservationMask::Flags::Constant(n, true);
  Eigen::VectorXd y = y0;
  for (Index k = 0; k < dropped; ++k) {
    const Index i = order[static_cast<std::size_t>(k)];
    observed(i) = false;
    y(i) = 0.0;
  }
  return {std::move(y), ObservationMask(std::move(observed))};
}

Corrupted add_noise(const Eigen::VectorXd& y0, double std, std::uint64_t seed) {
  if (!(std >= 0.0)) throw ParameterError("noise std must be >= 0");
  Eigen::VectorXd y = y0;
  if (std > 0.0) {
    auto engine = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, std);
    for (Index i = 0; i < y.size(); ++i) y(i) += gauss(engine);
  }
  return {std::move(y), ObservationMask::full(y0.size())};
}

Corrupted corrupt(const Eigen::VectorXd& y0, const CorruptionSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case CorruptionKind::clip:
      return clip(y0, spec.clip_level);
    case CorruptionKind::random_missing:
      return random_missing(y0, spec.missing_rate, spec.rng_seed);
    case CorruptionKind::additive_noise:
      return add_noise(y0, spec.noise_std, spec.rng_seed);
  }
  throw ParameterError("unknown corruption kind");
}

}  // namespace delayrank
