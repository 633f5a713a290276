#include <doctest.h>

#include <cmath>
#include <random>

#include "delayrank/als_solver.hpp"
#include "delayrank/baselines.hpp"
#include "delayrank/corruption.hpp"
#include "delayrank/signals.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace delayrank;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("QV with a full mask and no penalty returns the data") {
  std::mt19937_64 rng(1);
  const VectorXd y = oracle::gaussian(20, rng);
  CHECK(oracle::relative_error(qv_reconstruct(y, ObservationMask::full(20), 0.0), y) < 1e-14);
}

TEST_CASE("QV with a large penalty approaches the mean") {
  std::mt19937_64 rng(2);
  VectorXd y = oracle::gaussian(30, rng);
  y.array() -= y.mean();
  y.array() += 0.75;
  const VectorXd x = qv_reconstruct(y, ObservationMask::full(30), 1e8);
  CHECK((x.array() - 0.75).abs().maxCoeff() < 1e-4);
}

TEST_CASE("QV satisfies its optimality condition") {
  std::mt19937_64 rng(3);
  for (double lambda : {1e-3, 0.1, 10.0}) {
    const VectorXd y = oracle::gaussian(50, rng);
    const auto observed = oracle::random_observed(50, 0.6, rng);
    const auto mask = testing::to_mask(observed);
    const VectorXd x = qv_reconstruct(y, mask, lambda);
    const MatrixXd p = oracle::projection(observed);
    const MatrixXd l = oracle::difference_matrix(50);
    const VectorXd grad = (p + lambda * l.transpose() * l) * x - p * y;
    CHECK(grad.norm() <= 1e-10 * (p * y).norm());
  }
}

TEST_CASE("QV interpolates linearly across a clipped run") {
  SignalSpec spec;
  spec.frequency = 1.0 / 64.0;
  const auto corrupted = clip(generate(spec), 0.2);
  const VectorXd x = qv_reconstruct(corrupted.y, corrupted.mask, 1e-6);
  // Inside each missing run the minimizer is the straight line between the
  // bracketing observations, so it never leaves [-c, c].
  CHECK(x.cwiseAbs().maxCoeff() <= 0.2 + 1e-9);
  for (Index i = 1; i + 1 < x.size(); ++i) {
    if (!corrupted.mask(i)) CHECK(std::abs(x(i - 1) - 2.0 * x(i) + x(i + 1)) < 1e-6);
  }
}

TEST_CASE("QV rejects a singular system and bad input") {
  const VectorXd y = VectorXd::Ones(4);
  const auto mask = testing::to_mask({true, false, true, true});
  CHECK_THROWS_AS(qv_reconstruct(y, mask, 0.0), SingularSystemError);
  CHECK_THROWS_AS(qv_reconstruct(y, mask, -1.0), ParameterError);
  CHECK_THROWS_AS(qv_reconstruct(y, testing::to_mask(std::vector<bool>(4, false)), 1.0),
                  ParameterError);
  CHECK_NOTHROW(qv_reconstruct(y, mask, 1e-3));
}

TEST_CASE("QV equals the proposed model with tau = 1 up to the fitted scale") {
  std::mt19937_64 rng(4);
  const Index n = 32;
  const VectorXd y = oracle::gaussian(n, rng);
  const auto mask = testing::to_mask(oracle::random_observed(n, 0.75, rng));
  Hyperparams hp;
  hp.tau = 1;
  hp.lambda_a = 0.05;
  SolverConfig cfg;
  cfg.outer_tol = 1e-15;
  cfg.max_outer_iters = 5000;
  const auto [a0, b0] = random_init(EmbeddingGeometry(n, 1), 11, 0);
  const auto report = als_solve(y, mask, hp, cfg, a0, b0);
  const double s = report.final_model.sigma;
  const VectorXd q = qv_reconstruct(y, mask, hp.lambda_a / (s * s));
  const VectorXd pq = mask.apply(q);
  CHECK(oracle::relative_error(reconstruct(report.final_model), (pq.dot(y) / pq.squaredNorm()) * q) <
        1e-6);
}

TEST_CASE("spline with a full mask returns the data") {
  std::mt19937_64 rng(5);
  const VectorXd y = oracle::gaussian(25, rng);
  CHECK(oracle::relative_error(spline_reconstruct(y, ObservationMask::full(25)), y) < 1e-13);
}

TEST_CASE("spline through two points is linear") {
  VectorXd y(3);
  y << 0.0, 99.0, 2.0;
  const VectorXd x = spline_reconstruct(y, testing::to_mask({true, false, true}));
  CHECK(x(0) == doctest::Approx(0.0).scale(1e-15));
  CHECK(x(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x(2) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("spline extends boundary pieces outside the observed range") {
  VectorXd y = VectorXd::Zero(8);
  for (Index i = 2; i < 6; ++i) y(i) = 3.0 * static_cast<double>(i) - 1.0;
  const auto mask = testing::to_mask({false, false, true, true, true, true, false, false});
  const VectorXd x = spline_reconstruct(y, mask);
  for (Index i = 0; i < 8; ++i) CHECK(x(i) == doctest::Approx(3.0 * static_cast<double>(i) - 1.0));
}

TEST_CASE("spline reproduces observations and is a natural C2 cubic") {
  std::mt19937_64 rng(6);
  const Index n = 60;
  const VectorXd y = oracle::gaussian(n, rng);
  auto observed = oracle::random_observed(n, 0.5, rng);
  const auto mask = testing::to_mask(observed);
  const VectorXd x = spline_reconstruct(y, mask);
  std::vector<Index> knots;
  for (Index i = 0; i < n; ++i) {
    if (observed[static_cast<std::size_t>(i)]) {
      CHECK(x(i) == doctest::Approx(y(i)).epsilon(1e-12));
      knots.push_back(i);
    }
  }
  // On integer samples a cubic has constant third difference; each window of
  // four samples inside one knot interval must satisfy that.
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const Index lo = knots[k];
    const Index hi = knots[k + 1];
    if (hi - lo < 3) continue;
    const double d3 = x(lo + 3) - 3 * x(lo + 2) + 3 * x(lo + 1) - x(lo);
    for (Index i = lo; i + 3 <= hi; ++i) {
      CHECK(x(i + 3) - 3 * x(i + 2) + 3 * x(i + 1) - x(i) == doctest::Approx(d3).scale(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("spline matches an independent natural-spline solve") {
  std::mt19937_64 rng(7);
  const Index n = 30;
  const VectorXd y = oracle::gaussian(n, rng);
  const auto observed = oracle::random_observed(n, 0.4, rng);
  std::vector<double> t;
  std::vector<double> v;
  for (Index i = 0; i < n; ++i) {
    if (observed[static_cast<std::size_t>(i)]) {
      t.push_back(static_cast<double>(i));
      v.push_back(y(i));
    }
  }
  // Dense system for piecewise cubics p_k(s) = c0 + c1 s + c2 s^2 + c3 s^3,
  // s = t - t_k, with interpolation, C1, C2 and natural ends.
  const auto m = static_cast<Index>(t.size()) - 1;
  MatrixXd sys = MatrixXd::Zero(4 * m, 4 * m);
  VectorXd rhs = VectorXd::Zero(4 * m);
  Index row = 0;
  for (Index k = 0; k < m; ++k) {
    const double h = t[static_cast<std::size_t>(k + 1)] - t[static_cast<std::size_t>(k)];
    sys(row, 4 * k) = 1.0;
    rhs(row++) = v[static_cast<std::size_t>(k)];
    sys.block(row, 4 * k, 1, 4) << 1.0, h, h * h, h * h * h;
    rhs(row++) = v[static_cast<std::size_t>(k + 1)];
    if (k + 1 < m) {
      sys.block(row, 4 * k, 1, 4) << 0.0, 1.0, 2 * h, 3 * h * h;
      sys(row++, 4 * (k + 1) + 1) = -1.0;
      sys.block(row, 4 * k, 1, 4) << 0.0, 0.0, 2.0, 6 * h;
      sys(row++, 4 * (k + 1) + 2) = -2.0;
    }
  }
  sys(row++, 2) = 2.0;
  const double hl = t.back() - t[t.size() - 2];
  sys.block(row++, 4 * (m - 1), 1, 4) << 0.0, 0.0, 2.0, 6 * hl;
  REQUIRE(row == 4 * m);
  const VectorXd c = sys.fullPivLu().solve(rhs);

  const VectorXd x = spline_reconstruct(y, testing::to_mask(observed));
  for (Index i = 0; i < n; ++i) {
    const double ti = static_cast<double>(i);
    Index k = 0;
    while (k + 1 < m && ti > t[static_cast<std::size_t>(k + 1)]) ++k;
    const double s = ti - t[static_cast<std::size_t>(k)];
    const double expected = c(4 * k) + s * (c(4 * k + 1) + s * (c(4 * k + 2) + s * c(4 * k + 3)));
    CHECK(x(i) == doctest::Approx(expected).scale(1.0).epsilon(1e-9));
  }
}

TEST_CASE("spline needs two observations") {
  CHECK_THROWS_AS(spline_reconstruct(VectorXd::Ones(4), testing::to_mask({false, true, false, false})),
                  ParameterError);
}

TEST_CASE("clipped wavelet spline reconstruction undershoots the amplitude") {
  SignalSpec spec;
  spec.kind = SignalKind::wavelet;
  const VectorXd x0 = generate(spec);
  const auto corrupted = clip(x0, 0.2);
  const VectorXd x = spline_reconstruct(corrupted.y, corrupted.mask);
  CHECK(x.cwiseAbs().maxCoeff() < x0.cwiseAbs().maxCoeff());
  CHECK(x.cwiseAbs().maxCoeff() > 0.2);
}

TEST_CASE("Gabor dictionary shape and normalization") {
  for (Index n : {16, 64, 128}) {
    const GaborDictionary dict(n, 2.0);
    CHECK(dict.size() == 2 * n);
    CHECK(dict.n() == n);
    CHECK((dict.atoms().colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-14);
  }
  CHECK(GaborDictionary(16, 1.0).size() == 16);
  CHECK_THROWS_AS(GaborDictionary(16, 0.0), ParameterError);
}

TEST_CASE("Gabor atoms are windowed sinusoids on the declared grid") {
  const Index n = 32;
  const GaborDictionary dict(n, 2.0);
  const double rn = 64.0;
  for (Index k : {0, 5, 31}) {
    VectorXd c(n);
    VectorXd s(n);
    for (Index i = 0; i < n; ++i) {
      const double u = (static_cast<double>(i) - (n - 1) / 2.0) / (n / 4.0);
      const double w = std::exp(-0.5 * u * u);
      const double t = static_cast<double>(i) - (n - 1) / 2.0;
      c(i) = w * std::cos(2 * M_PI * static_cast<double>(k) * t / rn);
      s(i) = w * std::sin(2 * M_PI * (static_cast<double>(k) + 0.5) * t / rn);
    }
    CHECK(oracle::relative_error(dict.atoms().col(k), c.normalized()) < 1e-13);
    CHECK(oracle::relative_error(dict.atoms().col(n + k), s.normalized()) < 1e-13);
  }
}

TEST_CASE("OMP recovers a single atom in one step") {
  const GaborDictionary dict(64);
  const VectorXd y = dict.atoms().col(37);
  const auto res = omp_reconstruct(y, ObservationMask::full(64), dict, 1e-6);
  REQUIRE(res.code.support.size() == 1);
  CHECK(res.code.support[0] == 37);
  CHECK(res.code.coefficients(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.code.residual_history.size() == 2);
  CHECK(oracle::relative_error(res.signal, y) < 1e-12);
}

TEST_CASE("OMP matches an exhaustive two-sparse search") {
  const Index n = 16;
  const GaborDictionary dict(n);
  const MatrixXd& d = dict.atoms();
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<Index> pick(0, d.cols() - 1);
  int trials = 0;
  while (trials < 20) {
    const Index i = pick(rng);
    const Index j = pick(rng);
    // Greedy selection is only guaranteed for weakly coherent pairs.
    if (i == j || std::abs(d.col(i).dot(d.col(j))) > 0.2) continue;
    ++trials;
    const VectorXd y = 1.3 * d.col(i) - 0.8 * d.col(j);

    double best = std::numeric_limits<double>::infinity();
    std::pair<Index, Index> best_pair;
    for (Index p = 0; p < d.cols(); ++p) {
      for (Index q = p + 1; q < d.cols(); ++q) {
        MatrixXd sub(n, 2);
        sub << d.col(p), d.col(q);
        const double r = (y - sub * sub.colPivHouseholderQr().solve(y)).squaredNorm();
        if (r < best) {
          best = r;
          best_pair = {p, q};
        }
      }
    }
    CHECK(best < 1e-20);
    CHECK(best_pair == std::make_pair(std::min(i, j), std::max(i, j)));

    const auto res = omp_reconstruct(y, ObservationMask::full(n), dict, 1e-12);
    auto support = res.code.support;
    std::sort(support.begin(), support.end());
    CHECK(support == std::vector<Index>{best_pair.first, best_pair.second});
    CHECK(res.code.residual_norm_sq <= 1e-12);
  }
}

TEST_CASE("OMP residual is non-increasing and picks the best-correlated atom") {
  std::mt19937_64 rng(9);
  const Index n = 64;
  const GaborDictionary dict(n);
  SignalSpec spec;
  spec.n = n;
  spec.kind = SignalKind::wavelet;
  spec.width = 10.0;
  const VectorXd y = generate(spec) + 0.05 * oracle::gaussian(n, rng);
  const auto observed = oracle::random_observed(n, 0.7, rng);
  const auto mask = testing::to_mask(observed);
  const auto res = omp_reconstruct(y, mask, dict, 1e-3);

  const auto& h = res.code.residual_history;
  REQUIRE(h.size() == res.code.support.size() + 1);
  CHECK(h.front() == doctest::Approx(mask.apply(y).squaredNorm()));
  for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] <= h[k - 1] * (1 + 1e-12));
  CHECK(res.code.residual_norm_sq == doctest::Approx(mask.apply(y - res.signal).squaredNorm()).epsilon(1e-10));
  CHECK(static_cast<Index>(res.code.support.size()) <= (n + 3) / 4);
  CHECK(res.code.coefficients.size() == static_cast<Index>(res.code.support.size()));

  const MatrixXd pd = oracle::projection(observed) * dict.atoms();
  const VectorXd py = mask.apply(y);
  Index first = 0;
  double best = -1.0;
  for (Index k = 0; k < pd.cols(); ++k) {
    const double score = std::abs(pd.col(k).dot(py)) / pd.col(k).norm();
    if (score > best) {
      best = score;
      first = k;
    }
  }
  CHECK(res.code.support.front() == first);

  // Replay the greedy path with dense least squares on the observed rows.
  std::vector<Index> chosen;
  VectorXd r = py;
  for (Index picked : res.code.support) {
    Index arg = -1;
    double top = -1.0;
    for (Index k = 0; k < pd.cols(); ++k) {
      if (std::find(chosen.begin(), chosen.end(), k) != chosen.end()) continue;
      const double nk = pd.col(k).norm();
      if (nk == 0.0) continue;
      const double score = std::abs(pd.col(k).dot(r)) / nk;
      if (score > top) {
        top = score;
        arg = k;
      }
    }
    CHECK(arg == picked);
    chosen.push_back(picked);
    MatrixXd sub(n, static_cast<Index>(chosen.size()));
    for (std::size_t c = 0; c < chosen.size(); ++c) sub.col(static_cast<Index>(c)) = pd.col(chosen[c]);
    r = py - sub * sub.colPivHouseholderQr().solve(py);
  }
}

TEST_CASE("OMP stops at the sparsity cap when epsilon is unreachable") {
  std::mt19937_64 rng(10);
  const Index n = 32;
  const GaborDictionary dict(n);
  const VectorXd y = oracle::gaussian(n, rng);
  const auto res = omp_reconstruct(y, ObservationMask::full(n), dict, 1e-30);
  CHECK(res.code.support.size() == 8);
}

TEST_CASE("OMP input validation") {
  const GaborDictionary dict(16);
  CHECK_THROWS_AS(omp_reconstruct(VectorXd::Ones(16), ObservationMask::full(16), dict, 0.0), ParameterError);
  CHECK_THROWS_AS(omp_reconstruct(VectorXd::Ones(15), ObservationMask::full(15), dict, 1e-3), DimensionError);
  CHECK_THROWS_AS(omp_reconstruct(VectorXd::Ones(16), testing::to_mask(std::vector<bool>(16, false)), dict, 1e-3),
                  ParameterError);
}
