#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "delayrank/signals.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace delayrank;
using Eigen::VectorXd;

namespace {

std::vector<double> zero_crossings(const VectorXd& x) {
  std::vector<double> out;
  for (Index i = 0; i + 1 < x.size(); ++i) {
    if ((x(i) < 0.0) != (x(i + 1) < 0.0)) {
      out.push_back(static_cast<double>(i) + x(i) / (x(i) - x(i + 1)));
    }
  }
  return out;
}

VectorXd circular_diff(const VectorXd& v) {
  const Index n = v.size();
  VectorXd d(n);
  for (Index i = 0; i < n; ++i) d(i) = v(i) - v((i + n - 1) % n);
  return d;
}

}  // namespace

TEST_CASE("sine with four periods") {
  SignalSpec spec;
  spec.n = 128;
  spec.frequency = 1.0 / 32.0;
  const VectorXd x = generate(spec);
  CHECK(x.cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-15));
  for (Index p = 0; p < 4; ++p) {
    CHECK(x(32 * p + 8) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x(32 * p + 24) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(x(32 * p)) < 1e-13);
  }
  CHECK(zero_crossings(x).size() == 7);
}

TEST_CASE("sine follows its closed form") {
  SignalSpec spec;
  spec.n = 50;
  spec.amplitude = 2.5;
  spec.frequency = 0.07;
  spec.phase = 0.3;
  const VectorXd x = generate(spec);
  for (Index i = 0; i < 50; ++i) {
    CHECK(x(i) == doctest::Approx(2.5 * std::sin(2 * std::numbers::pi * 0.07 * static_cast<double>(i) + 0.3)));
  }
}

TEST_CASE("wavelet closed form and infinite-width limit") {
  SignalSpec spec;
  spec.kind = SignalKind::wavelet;
  spec.n = 100;
  spec.frequency = 0.05;
  spec.width = 12.0;
  spec.center = 40.0;
  const VectorXd x = generate(spec);
  for (Index i = 0; i < 100; ++i) {
    const double d = static_cast<double>(i) - 40.0;
    CHECK(x(i) == doctest::Approx(std::exp(-d * d / 288.0) * std::cos(2 * std::numbers::pi * 0.05 * d)));
  }
  CHECK(x(40) == doctest::Approx(1.0));

  spec.width = std::numeric_limits<double>::infinity();
  const VectorXd carrier = generate(spec);
  for (Index i = 0; i < 100; ++i) {
    CHECK(carrier(i) == doctest::Approx(std::cos(2 * std::numbers::pi * 0.05 * (static_cast<double>(i) - 40.0))));
  }

  spec.width = 1e9;
  CHECK(oracle::relative_error(generate(spec), carrier) < 1e-12);

  SignalSpec centered;
  centered.kind = SignalKind::wavelet;
  centered.n = 11;
  const VectorXd w = generate(centered);
  CHECK(w(5) == doctest::Approx(1.0));
  CHECK(oracle::relative_error(w, w.reverse()) < 1e-14);
}

TEST_CASE("chirp doubling its frequency halves the zero-crossing spacing") {
  SignalSpec spec;
  spec.kind = SignalKind::chirp;
  spec.n = 4000;
  spec.chirp_start = 0.01;
  spec.chirp_rate = 0.01 / 4000.0;
  const auto z = zero_crossings(generate(spec));
  REQUIRE(z.size() > 10);
  const double first = z[1] - z[0];
  const double last = z.back() - z[z.size() - 2];
  CHECK(first == doctest::Approx(50.0).epsilon(0.03));
  CHECK(last / first == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("generators are deterministic and validate their spec") {
  SignalSpec spec;
  spec.kind = SignalKind::chirp;
  spec.chirp_rate = 1e-4;
  CHECK(generate(spec) == generate(spec));
  SignalSpec bad;
  bad.n = 1;
  CHECK_THROWS_AS(generate(bad), ParameterError);
  bad = SignalSpec{};
  bad.frequency = 0.5;
  CHECK_THROWS_AS(generate(bad), ParameterError);
  bad.frequency = 0.0;
  CHECK_THROWS_AS(generate(bad), ParameterError);
  bad = SignalSpec{};
  bad.kind = SignalKind::wavelet;
  bad.width = 0.0;
  CHECK_THROWS_AS(generate(bad), ParameterError);
}

TEST_CASE("snr_db cases") {
  std::mt19937_64 rng(1);
  const VectorXd x0 = oracle::gaussian(64, rng);
  CHECK(snr_db(x0, x0) == kSnrCapDb);
  CHECK(snr_db(x0, VectorXd::Zero(64)) == doctest::Approx(0.0).scale(1e-12));
  CHECK(snr_db(x0, 1.1 * x0) == doctest::Approx(20.0).epsilon(1e-12));
  const VectorXd e = oracle::gaussian(64, rng);
  const double expected = 10.0 * std::log10(x0.squaredNorm() / e.squaredNorm());
  CHECK(snr_db(x0, x0 + e) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(snr_db(7.0 * x0, 7.0 * (x0 + e)) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(snr_db(VectorXd::Zero(64), x0), ParameterError);
  CHECK_THROWS_AS(snr_db(x0, VectorXd::Zero(63)), DimensionError);
}

TEST_CASE("masked_snr_db uses only the unobserved samples") {
  VectorXd x0(4);
  x0 << 1.0, 2.0, 3.0, 4.0;
  VectorXd x(4);
  x << 100.0, 2.2, 3.0, -50.0;
  const auto mask = testing::to_mask({true, false, true, true});
  CHECK(masked_snr_db(x0, x, mask) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(std::isnan(masked_snr_db(x0, x, ObservationMask::full(4))));
}

TEST_CASE("mse cases") {
  std::mt19937_64 rng(2);
  const VectorXd x0 = oracle::gaussian(30, rng);
  CHECK(mse(x0, x0) == 0.0);
  CHECK(mse(x0, x0.array() + 0.3) == doctest::Approx(0.09).epsilon(1e-12));
  const VectorXd x = oracle::gaussian(30, rng);
  double s = 0.0;
  for (Index i = 0; i < 30; ++i) s += (x0(i) - x(i)) * (x0(i) - x(i));
  CHECK(mse(x0, x) == doctest::Approx(s / 30.0).epsilon(1e-14));
  CHECK_THROWS_AS(mse(x0, VectorXd::Zero(29)), DimensionError);
}

TEST_CASE("soft smoothness gap matches a direct DFT evaluation") {
  std::mt19937_64 rng(3);
  const Index n = 64;
  const VectorXd a = oracle::gaussian(n, rng);
  const VectorXd b = oracle::gaussian(n, rng);
  VectorXd l = VectorXd::Zero(n);
  l(0) = -1.0;
  l(1) = 1.0;
  const auto af = oracle::dft(a);
  const auto bf = oracle::dft(b);
  const auto lf = oracle::dft(l);
  double rhs = 0.0;
  for (std::size_t k = 0; k < af.size(); ++k) rhs += std::norm(lf[k]) * std::abs(af[k] * bf[k]);
  rhs *= 2.0 / static_cast<double>(n);
  const double lhs = circular_diff(a).squaredNorm() + circular_diff(b).squaredNorm();

  const auto gap = soft_smoothness_gap(a, b);
  CHECK(gap.lhs == doctest::Approx(lhs).epsilon(1e-13));
  CHECK(gap.rhs == doctest::Approx(rhs).epsilon(1e-12));
  CHECK(gap.lhs >= gap.rhs - 1e-10);
}

TEST_CASE("soft smoothness equality and constant cases") {
  std::mt19937_64 rng(4);
  const VectorXd a = oracle::gaussian(32, rng);
  const auto equal = soft_smoothness_gap(a, a);
  CHECK(equal.lhs == doctest::Approx(2.0 * circular_diff(a).squaredNorm()));
  CHECK(equal.rhs == doctest::Approx(equal.lhs).epsilon(1e-12));

  const VectorXd b = oracle::gaussian(32, rng);
  const auto constant = soft_smoothness_gap(VectorXd::Constant(32, 0.7), b);
  CHECK(constant.lhs == doctest::Approx(circular_diff(b).squaredNorm()));
  CHECK(std::abs(constant.rhs) < 1e-12);
}

TEST_CASE("soft smoothness bound holds on 1000 random pairs") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<Index> length(2, 128);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = length(rng);
    const auto gap = soft_smoothness_gap(oracle::gaussian(n, rng), oracle::gaussian(n, rng));
    if (gap.lhs < gap.rhs - 1e-10) ++violations;
  }
  CHECK(violations == 0);
  CHECK_THROWS_AS(soft_smoothness_gap(VectorXd::Ones(4), VectorXd::Ones(5)), DimensionError);
}
