#pragma once

// Corruption models producing an observed signal y and its mask from a clean
// signal: clipping, random sample loss and additive Gaussian noise.

#include <Eigen/Core>

#include <cstdint>
#include <string>

#include "delayrank/rank1_model.hpp"

namespace delayrank {

enum class CorruptionKind { clip, random_missing, additive_noise };

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::clip;
  double clip_level = 1.0;
  double missing_rate = 0.0;
  double noise_std = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
  /// Short label such as "clip:0.2", "missing:0.5" or "noise:0.1".
  std::string descriptor() const;
  /// Parses the descriptor form back; the seed is left at zero.
  static CorruptionSpec parse(const std::string& text);
};

struct Corrupted {
  Eigen::VectorXd y;
  ObservationMask mask;
};

/// Saturates at +/-c. Samples with |y0| > c are marked missing; the clipped
/// values stay in y.
Corrupted clip(const Eigen::VectorXd& y0, double c);

/// Drops exactly floor(rate * N) samples chosen uniformly without
/// replacement; dropped samples are zeroed.
Corrupted random_missing(const Eigen::VectorXd& y0, double rate, std::uint64_t seed);

/// y0 plus i.i.d. N(0, std^2) noise; every sample stays observed.
Corrupted add_noise(const Eigen::VectorXd& y0, double std, std::uint64_t seed);

Corrupted corrupt(const Eigen::VectorXd& y0, const CorruptionSpec& spec);

}  // namespace delayrank
