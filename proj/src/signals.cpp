#include "delayrank/signals.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace delayrank {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool valid_frequency(double f) { return f > 0.0 && f < 0.5; }

void check_pair(const Eigen::VectorXd& x0, const Eigen::VectorXd& x) {
  if (x0.size() != x.size()) throw DimensionError("metric: length mismatch");
}

double ratio_db(double signal, double error) {
  if (error == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / error));
}

}  // namespace

void SignalSpec::validate() const {
  if (n < 2) throw ParameterError("signal length must be >= 2");
  switch (kind) {
    case SignalKind::sine:
    case SignalKind::wavelet:
      if (!valid_frequency(frequency)) throw ParameterError("frequency must lie in (0, 0.5)");
      if (kind == SignalKind::wavelet && !(width > 0.0)) {
        throw ParameterError("wavelet width must be > 0");
      }
      break;
    case SignalKind::chirp: {
      const double end = chirp_start + chirp_rate * static_cast<double>(n - 1);
      if (!valid_frequency(chirp_start) || !valid_frequency(end)) {
        throw ParameterError("chirp instantaneous frequency must stay in (0, 0.5)");
      }
      break;
    }
  }
}

Eigen::VectorXd generate(const SignalSpec& spec) {
  spec.validate();
  const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(spec.n, 0.0, static_cast<double>(spec.n - 1));
  switch (spec.kind) {
    case SignalKind::sine:
      return (spec.amplitude * (kTwoPi * spec.frequency * t + spec.phase).sin()).matrix();
    case SignalKind::wavelet: {
      const double c = std::isnan(spec.center) ? static_cast<double>(spec.n - 1) / 2.0 : spec.center;
      const Eigen::ArrayXd d = t - c;
      const Eigen::ArrayXd envelope =
          std::isinf(spec.width) ? Eigen::ArrayXd::Ones(spec.n)
                                 : Eigen::ArrayXd((-d.square() / (2.0 * spec.width * spec.width)).exp());
      return (spec.amplitude * envelope * (kTwoPi * spec.frequency * d + spec.phase).cos()).matrix();
    }
    case SignalKind::chirp:
      return (spec.amplitude *
              (kTwoPi * (spec.chirp_start * t + 0.5 * spec.chirp_rate * t.square()) + spec.phase).sin())
          .matrix();
  }
  throw ParameterError("unknown signal kind");
}

double snr_db(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate) {
  check_pair(reference, estimate);
  const double signal = reference.squaredNorm();
  if (!(signal > 0.0)) throw ParameterError("snr_db: reference signal is zero");
  return ratio_db(signal, (reference - estimate).squaredNorm());
}

double masked_snr_db(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate,
                     const ObservationMask& mask) {
  check_pair(reference, estimate);
  if (mask.size() != reference.size()) throw DimensionError("masked_snr_db: mask length mismatch");
  double signal = 0.0;
  double error = 0.0;
  for (Index i = 0; i < reference.size(); ++i) {
    if (mask(i)) continue;
    signal += reference(i) * reference(i);
    const double e = reference(i) - estimate(i);
    error += e * e;
  }
  if (!(signal > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return ratio_db(signal, error);
}

double mse(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate) {
  check_pair(reference, estimate);
  if (reference.size() == 0) throw DimensionError("mse: empty input");
  return (reference - estimate).squaredNorm() / static_cast<double>(reference.size());
}

SmoothnessGap soft_smoothness_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DimensionError("soft_smoothness_gap: length mismatch");
  const Index n = a.size();
  if (n < 2) throw DimensionError("soft_smoothness_gap: need at least 2 samples");

  const auto circular_diff_energy = [n](const Eigen::VectorXd& v) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double d = v(i) - v((i + n - 1) % n);
      s += d * d;
    }
    return s;
  };

  Eigen::FFT<double> fft;
  std::vector<double> av(a.data(), a.data() + n);
  std::vector<double> bv(b.data(), b.data() + n);
  std::vector<double> lv(static_cast<std::size_t>(n), 0.0);
  lv[0] = -1.0;
  lv[1] = 1.0;
  std::vector<std::complex<double>> af, bf, lf;
  fft.fwd(af, av);
  fft.fwd(bf, bv);
  fft.fwd(lf, lv);

  SmoothnessGap gap;
  gap.lhs = circular_diff_energy(a) + circular_diff_energy(b);
  double s = 0.0;
  for (Index k = 0; k < n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    s += std::norm(lf[ku]) * std::abs(af[ku] * bf[ku]);
  }
  // Unnormalized DFT: Parseval carries a 1/n factor.
  gap.rhs = 2.0 * s / static_cast<double>(n);
  return gap;
}

}  // namespace delayrank
