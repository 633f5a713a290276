#pragma once

// Synthetic test signals and reconstruction metrics.

#include <Eigen/Core>

#include <limits>

#include "delayrank/rank1_model.hpp"

namespace delayrank {

enum class SignalKind { sine, wavelet, chirp };

/// Frequencies are in cycles per sample.
struct SignalSpec {
  SignalKind kind = SignalKind::sine;
  Index n = 256;
  double amplitude = 1.0;
  /// sine and wavelet carrier frequency.
  double frequency = 1.0 / 64.0;
  double phase = 0.0;
  /// Wavelet envelope center; NaN selects the middle sample (n - 1) / 2.
  double center = std::numeric_limits<double>::quiet_NaN();
  /// Wavelet envelope standard deviation in samples; +inf gives a pure carrier.
  double width = 32.0;
  /// Chirp start frequency f0 and sweep rate k: phase 2 pi (f0 n + k n^2 / 2).
  double chirp_start = 0.01;
  double chirp_rate = 0.0;

  void validate() const;
};

Eigen::VectorXd generate(const SignalSpec& spec);

/// Value reported when the reconstruction is exact.
inline constexpr double kSnrCapDb = 300.0;

/// 10 log10(||x0||^2 / ||x0 - x||^2), capped at kSnrCapDb.
double snr_db(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate);

/// SNR restricted to the unobserved samples; NaN when nothing is missing or
/// the reference is zero there.
double masked_snr_db(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate,
                     const ObservationMask& mask);

double mse(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate);

struct SmoothnessGap {
  /// ||l (*) a||^2 + ||l (*) b||^2 with circular first differences.
  double lhs = 0.0;
  /// 2 sum_k |l~_k|^2 |a~_k b~_k| under the unitary DFT.
  double rhs = 0.0;
};

/// Both sides of the arithmetic/geometric-mean bound relating factor
/// smoothness to the spectrum of their circular convolution.
SmoothnessGap soft_smoothness_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace delayrank
