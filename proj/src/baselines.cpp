#include "delayrank/baselines.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <string>

#include "delayrank/banded_cholesky.hpp"

namespace delayrank {

Eigen::VectorXd qv_reconstruct(const Eigen::VectorXd& y, const ObservationMask& mask,
                               double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("QV weight must be nonnegative");
  if (mask.size() != y.size()) throw DimensionError("qv_reconstruct: mask length mismatch");
  if (mask.count() == 0) throw ParameterError("qv_reconstruct: no observed samples");
  if (lambda == 0.0) {
    if (!mask.is_full()) {
      throw SingularSystemError("qv_reconstruct: lambda = 0 leaves missing samples undetermined");
    }
    return y;
  }

  const Index n = y.size();
  SymmetricBand system(n, 1);
  for (Index i = 0; i < n; ++i) {
    if (mask(i)) system.add_diagonal(i, 1.0);
  }
  system.add_difference_gram(lambda);
  BandedCholesky chol;
  if (!chol.compute(system)) throw SingularSystemError("qv_reconstruct: system not positive definite");
  return chol.solve(mask.apply(y));
}

Eigen::VectorXd spline_reconstruct(const Eigen::VectorXd& y, const ObservationMask& mask) {
  if (mask.size() != y.size()) throw DimensionError("spline_reconstruct: mask length mismatch");
  if (mask.count() < 2) throw ParameterError("spline_reconstruct needs at least 2 observed samples");

  std::vector<Index> knots;
  knots.reserve(static_cast<std::size_t>(mask.count()));
  for (Index i = 0; i < y.size(); ++i) {
    if (mask(i)) knots.push_back(i);
  }
  const Index m = static_cast<Index>(knots.size()) - 1;  // number of pieces
  const auto xk = [&](Index i) { return static_cast<double>(knots[static_cast<std::size_t>(i)]); };
  const auto yk = [&](Index i) { return y(knots[static_cast<std::size_t>(i)]); };

  // Second derivatives at the knots; natural ends fix them to zero.
  Eigen::VectorXd curvature = Eigen::VectorXd::Zero(m + 1);
  if (m >= 2) {
    SymmetricBand system(m - 1, 1);
    Eigen::VectorXd rhs(m - 1);
    for (Index i = 1; i < m; ++i) {
      const double h0 = xk(i) - xk(i - 1);
      const double h1 = xk(i + 1) - xk(i);
      system.add_diagonal(i - 1, 2.0 * (h0 + h1));
      if (i > 1) system.lower(i - 1, i - 2) = h0;
      rhs(i - 1) = 6.0 * ((yk(i + 1) - yk(i)) / h1 - (yk(i) - yk(i - 1)) / h0);
    }
    BandedCholesky chol;
    if (!chol.compute(system)) throw SingularSystemError("spline system not positive definite");
    curvature.segment(1, m - 1) = chol.solve(rhs);
  }

  Eigen::VectorXd out(y.size());
  Index piece = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const double x = static_cast<double>(i);
    while (piece < m - 1 && x > xk(piece + 1)) ++piece;
    const double x0 = xk(piece);
    const double x1 = xk(piece + 1);
    const double h = x1 - x0;
    const double m0 = curvature(piece);
    const double m1 = curvature(piece + 1);
    const double l = x1 - x;
    const double r = x - x0;
    out(i) = m0 * l * l * l / (6.0 * h) + m1 * r * r * r / (6.0 * h) +
             (yk(piece) - m0 * h * h / 6.0) * l / h + (yk(piece + 1) - m1 * h * h / 6.0) * r / h;
  }
  // Observed samples are reproduced exactly rather than up to round-off.
  for (Index i = 0; i < y.size(); ++i) {
    if (mask(i)) out(i) = y(i);
  }
  return out;
}

GaborDictionary::GaborDictionary(Index n, double redundancy) : redundancy_(redundancy) {
  if (n < 2) throw ParameterError("Gabor dictionary needs atom length >= 2");
  const double per_family = redundancy * static_cast<double>(n) / 2.0;
  if (!(redundancy > 0.0) || per_family < 1.0 || per_family != std::floor(per_family)) {
    throw ParameterError("Gabor redundancy must make rho*N an even positive integer");
  }
  const auto family = static_cast<Index>(per_family);
  const double lattice = redundancy * static_cast<double>(n);
  const double center = static_cast<double>(n - 1) / 2.0;
  const double width = static_cast<double>(n) / 4.0;

  Eigen::ArrayXd offset = Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) - center;
  const Eigen::ArrayXd window = (-offset.square() / (2.0 * width * width)).exp();

  atoms_.resize(n, 2 * family);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (Index k = 0; k < family; ++k) {
    const double f_cos = static_cast<double>(k) / lattice;
    const double f_sin = (static_cast<double>(k) + 0.5) / lattice;
    atoms_.col(k) = (window * (two_pi * f_cos * offset).cos()).matrix().normalized();
    atoms_.col(family + k) = (window * (two_pi * f_sin * offset).sin()).matrix().normalized();
  }
}

OmpResult omp_reconstruct(const Eigen::VectorXd& y, const ObservationMask& mask,
                          const GaborDictionary& dict, double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("OMP tolerance epsilon must be > 0");
  if (mask.size() != y.size() || dict.n() != y.size()) {
    throw DimensionError("omp_reconstruct: signal, mask and dictionary lengths differ");
  }
  if (mask.count() == 0) throw ParameterError("omp_reconstruct: no observed samples");

  const Index n = y.size();
  std::vector<Index> rows;
  for (Index i = 0; i < n; ++i) {
    if (mask(i)) rows.push_back(i);
  }
  const Index m = static_cast<Index>(rows.size());
  Eigen::MatrixXd observed_atoms(m, dict.size());
  Eigen::VectorXd observed_y(m);
  for (Index r = 0; r < m; ++r) {
    observed_atoms.row(r) = dict.atoms().row(rows[static_cast<std::size_t>(r)]);
    observed_y(r) = y(rows[static_cast<std::size_t>(r)]);
  }
  const Eigen::VectorXd norms = observed_atoms.colwise().norm().transpose();
  const double floor = 1e-10;
  std::vector<bool> available(static_cast<std::size_t>(dict.size()));
  bool any = false;
  for (Index j = 0; j < dict.size(); ++j) {
    available[static_cast<std::size_t>(j)] = norms(j) > floor;
    any = any || norms(j) > floor;
  }
  if (!any) throw ParameterError("omp_reconstruct: no atom has support on the observed samples");

  const Index cap = std::min<Index>((n + 3) / 4, m);
  SparseCode code;
  Eigen::VectorXd residual = observed_y;
  code.residual_history.push_back(residual.squaredNorm());

  while (residual.squaredNorm() > epsilon && static_cast<Index>(code.support.size()) < cap) {
    const Eigen::VectorXd corr = (observed_atoms.transpose() * residual).cwiseAbs().cwiseQuotient(norms);
    Index best = -1;
    double best_corr = 0.0;
    for (Index j = 0; j < dict.size(); ++j) {
      if (available[static_cast<std::size_t>(j)] && corr(j) > best_corr) {
        best = j;
        best_corr = corr(j);
      }
    }
    if (best < 0) break;
    available[static_cast<std::size_t>(best)] = false;
    code.support.push_back(best);

    Eigen::MatrixXd basis(m, static_cast<Index>(code.support.size()));
    for (std::size_t s = 0; s < code.support.size(); ++s) {
      basis.col(static_cast<Index>(s)) = observed_atoms.col(code.support[s]);
    }
    code.coefficients = basis.colPivHouseholderQr().solve(observed_y);
    residual = observed_y - basis * code.coefficients;
    code.residual_history.push_back(residual.squaredNorm());
  }

  OmpResult result;
  result.signal = Eigen::VectorXd::Zero(n);
  for (std::size_t s = 0; s < code.support.size(); ++s) {
    result.signal += code.coefficients(static_cast<Index>(s)) * dict.atoms().col(code.support[s]);
  }
  if (code.support.empty()) code.coefficients.resize(0);
  code.residual_norm_sq = residual.squaredNorm();
  result.code = std::move(code);
  return result;
}

}  // namespace delayrank
