#include "delayrank/als_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "delayrank/banded_cholesky.hpp"
#include "delayrank/conjugate_gradient.hpp"

namespace delayrank {

namespace {

void check_problem(const Rank1Model<double>& model, const Eigen::VectorXd& y,
                   const ObservationMask& mask) {
  const auto geom = model.geometry();
  if (y.size() != geom.n() || mask.size() != geom.n()) {
    throw DimensionError("signal or mask length differs from model geometry");
  }
  if (mask.count() == 0) throw ParameterError("observation mask is empty");
}

bool relative_change_below(double previous, double current, double tol) {
  return std::abs(previous - current) <=
         tol * std::max(std::abs(previous), std::numeric_limits<double>::min());
}

// Normalizes in place; leaves v untouched and returns false when it has no
// usable direction.
bool project_unit(Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) return false;
  v /= norm;
  return true;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_outer_iters < 1) throw ParameterError("max_outer_iters must be >= 1");
  if (!(outer_tol > 0.0)) throw ParameterError("outer_tol must be > 0");
  if (!(cg_tol > 0.0)) throw ParameterError("cg_tol must be > 0");
  if (cg_max_iters < 0) throw ParameterError("cg_max_iters must be >= 0");
  if (restarts_k < 1) throw ParameterError("restarts_k must be >= 1");
}

int SolverConfig::cg_iteration_limit(const EmbeddingGeometry& geom) const {
  if (cg_max_iters > 0) return cg_max_iters;
  const auto size = std::max(geom.rows(), geom.tau());
  return static_cast<int>(std::min<Index>(10 * size, 2000));
}

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged:
      return "converged";
    case SolverStatus::max_iterations:
      return "max_iterations";
    case SolverStatus::degenerate:
      return "degenerate";
  }
  return "unknown";
}

namespace {

template <typename Apply>
void solve_iteratively(const Apply& apply, const Eigen::VectorXd& rhs, const SolverConfig& config,
                       const EmbeddingGeometry& geom, FactorUpdate& update) {
  const auto cg = conjugate_gradient(apply, rhs, update.value, config.cg_tol,
                                     config.cg_iteration_limit(geom));
  update.cg_iterations = cg.iterations;
  update.relative_residual = cg.relative_residual;
  update.converged = cg.converged;
}

double relative_residual(const Eigen::VectorXd& residual, const Eigen::VectorXd& rhs) {
  const double ref = rhs.norm();
  return ref > 0.0 ? residual.norm() / ref : residual.norm();
}

// sigma^2 M_b^T P M_b + lambda_a L^T L. Each observed sample n adds the
// same tau x tau block rev(b) rev(b)^T at offset (n, n).
SymmetricBand assemble_a_system(const Rank1Model<double>& model, const ObservationMask& mask,
                                double lambda_a) {
  const auto geom = model.geometry();
  const Index tau = geom.tau();
  SymmetricBand system(geom.rows(), std::max<Index>(tau - 1, 1));
  const double scale = model.sigma * model.sigma / static_cast<double>(tau * tau);
  const Eigen::VectorXd rb = model.b.reverse() * std::sqrt(scale);
  const Index bw = system.bandwidth();
  auto& band = system.storage();
  for (Index n = 0; n < geom.n(); ++n) {
    if (!mask(n)) continue;
    for (Index p = 0; p < tau; ++p) {
      band.row(n + p).segment(bw - p, p + 1) += rb(p) * rb.head(p + 1).transpose();
    }
  }
  system.add_difference_gram(lambda_a);
  return system;
}

// sigma^2 M_a^T P M_a + lambda_b L^T L, dense tau x tau. Row k of the window
// matrix holds reversed a over the k-th observed sample's support.
Eigen::MatrixXd assemble_b_system(const Rank1Model<double>& model, const ObservationMask& mask,
                                  double lambda_b) {
  const auto geom = model.geometry();
  const Index tau = geom.tau();
  Eigen::MatrixXd windows(mask.count(), tau);
  Index row = 0;
  for (Index n = 0; n < geom.n(); ++n) {
    if (mask(n)) windows.row(row++) = model.a.segment(n, tau).reverse().transpose();
  }
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(tau, tau);
  const double scale = model.sigma * model.sigma / static_cast<double>(tau * tau);
  system.selfadjointView<Eigen::Lower>().rankUpdate(windows.transpose(), scale);
  system.triangularView<Eigen::StrictlyUpper>() = system.transpose();
  if (lambda_b != 0.0 && tau > 1) {
    system.diagonal().array() += 2.0 * lambda_b;
    system(0, 0) -= lambda_b;
    system(tau - 1, tau - 1) -= lambda_b;
    system.diagonal(1).array() -= lambda_b;
    system.diagonal(-1).array() -= lambda_b;
  }
  return system;
}

}  // namespace

FactorUpdate update_a(const Rank1Model<double>& model, const Eigen::VectorXd& y,
                      const ObservationMask& mask, const Hyperparams& hp,
                      const SolverConfig& config) {
  check_problem(model, y, mask);
  const auto& b = model.b;
  const double s2 = model.sigma * model.sigma;
  const DifferenceOperator diff(model.a.size());

  const auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd out = s2 * adjoint_wrt_a(mask.apply(inverse_embed_rank1(v, b)), b);
    if (hp.lambda_a != 0.0) out += hp.lambda_a * diff.apply_gram(v);
    return out;
  };
  const Eigen::VectorXd rhs = model.sigma * adjoint_wrt_a(mask.apply(y), b);

  FactorUpdate update;
  if (rhs.isZero(0.0)) {
    // Minimum-norm solution; the operator may be singular here.
    update.value = Eigen::VectorXd::Zero(rhs.size());
    update.converged = true;
    return update;
  }
  update.value = model.a;
  if (config.inner_solver == InnerSolver::direct) {
    BandedCholesky chol;
    if (chol.compute(assemble_a_system(model, mask, hp.lambda_a))) {
      update.value = chol.solve(rhs);
      update.relative_residual = relative_residual(rhs - apply(update.value), rhs);
      update.converged = true;
      return update;
    }
  }
  solve_iteratively(apply, rhs, config, model.geometry(), update);
  return update;
}

FactorUpdate update_b(const Rank1Model<double>& model, const Eigen::VectorXd& y,
                      const ObservationMask& mask, const Hyperparams& hp,
                      const SolverConfig& config) {
  check_problem(model, y, mask);
  const auto& a = model.a;
  const double s2 = model.sigma * model.sigma;
  const DifferenceOperator diff(model.b.size());

  const auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd out = s2 * adjoint_wrt_b(mask.apply(inverse_embed_rank1(a, v)), a);
    if (hp.lambda_b != 0.0) out += hp.lambda_b * diff.apply_gram(v);
    return out;
  };
  const Eigen::VectorXd rhs = model.sigma * adjoint_wrt_b(mask.apply(y), a);

  FactorUpdate update;
  if (rhs.isZero(0.0)) {
    // Minimum-norm solution; the operator may be singular here.
    update.value = Eigen::VectorXd::Zero(rhs.size());
    update.converged = true;
    return update;
  }
  update.value = model.b;
  if (config.inner_solver == InnerSolver::direct) {
    const Eigen::LLT<Eigen::MatrixXd> chol(assemble_b_system(model, mask, hp.lambda_b));
    if (chol.info() == Eigen::Success) {
      update.value = chol.solve(rhs);
      update.relative_residual = relative_residual(rhs - apply(update.value), rhs);
      update.converged = true;
      return update;
    }
  }
  solve_iteratively(apply, rhs, config, model.geometry(), update);
  return update;
}

double update_sigma(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& y,
                    const ObservationMask& mask) {
  const Eigen::VectorXd z = mask.apply(inverse_embed_rank1(a, b));
  if (z.size() != y.size()) throw DimensionError("update_sigma: signal length mismatch");
  const double zz = z.squaredNorm();
  if (!(zz > 0.0)) {
    throw DegenerateModelError("rank-1 factors vanish on every observed sample");
  }
  return y.dot(z) / zz;
}

SolverReport als_solve(const Eigen::VectorXd& y, const ObservationMask& mask,
                       const Hyperparams& hp, const SolverConfig& config,
                       const Eigen::VectorXd& a0, const Eigen::VectorXd& b0) {
  config.validate();
  SolverReport report;
  Rank1Model<double> model{a0, b0, 0.0};
  if (!project_unit(model.a) || !project_unit(model.b)) {
    throw ParameterError("als_solve: initial factors must be nonzero");
  }
  check_problem(model, y, mask);

  const auto record = [&](const Rank1Model<double>& m) {
    report.objective_trajectory.push_back(objective(m, y, mask, hp));
  };

  try {
    model.sigma = update_sigma(model.a, model.b, y, mask);
  } catch (const DegenerateModelError&) {
    report.final_model = model;
    report.status = SolverStatus::degenerate;
    record(model);
    return report;
  }
  record(model);

  try {
    for (int it = 1; it <= config.max_outer_iters; ++it) {
      auto next_a = update_a(model, y, mask, hp, config);
      if (!next_a.converged) ++report.cg_warnings;
      if (project_unit(next_a.value)) {
        model.a = std::move(next_a.value);
      } else {
        ++report.degenerate_updates;
      }
      model.sigma = update_sigma(model.a, model.b, y, mask);

      auto next_b = update_b(model, y, mask, hp, config);
      if (!next_b.converged) ++report.cg_warnings;
      if (project_unit(next_b.value)) {
        model.b = std::move(next_b.value);
      } else {
        ++report.degenerate_updates;
      }
      model.sigma = update_sigma(model.a, model.b, y, mask);

      const double previous = report.objective_trajectory.back();
      record(model);
      report.iterations_used = it;
      if (relative_change_below(previous, report.objective_trajectory.back(), config.outer_tol)) {
        report.converged = true;
        report.status = SolverStatus::converged;
        break;
      }
    }
  } catch (const DegenerateModelError&) {
    report.status = SolverStatus::degenerate;
  } catch (const SingularSystemError&) {
    report.status = SolverStatus::degenerate;
  }

  report.final_model = model;
  if (report.status == SolverStatus::degenerate) {
    // The model may have changed since the last recorded value.
    const double last = objective(model, y, mask, hp);
    if (report.objective_trajectory.back() != last) report.objective_trajectory.push_back(last);
  }
  return report;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> random_init(const EmbeddingGeometry& geom,
                                                        std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 engine(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd a(geom.rows());
  Eigen::VectorXd b(geom.tau());
  for (Index i = 0; i < a.size(); ++i) a(i) = gauss(engine);
  for (Index i = 0; i < b.size(); ++i) b(i) = gauss(engine);
  return {std::move(a), std::move(b)};
}

SolverReport monte_carlo_solve(const Eigen::VectorXd& y, const ObservationMask& mask,
                               const Hyperparams& hp, const SolverConfig& config) {
  config.validate();
  const EmbeddingGeometry geom(y.size(), hp.tau);

  SolverReport best;
  bool have_best = false;
  std::vector<RestartRecord> restarts;
  restarts.reserve(static_cast<std::size_t>(config.restarts_k));

  for (int k = 0; k < config.restarts_k; ++k) {
    const auto [a0, b0] = random_init(geom, config.rng_seed, k);
    SolverReport run = als_solve(y, mask, hp, config, a0, b0);
    restarts.push_back({k, run.status, run.objective_trajectory});
    if (run.status == SolverStatus::degenerate) continue;
    if (!have_best || run.final_objective() < best.final_objective()) {
      best = std::move(run);
      best.restart_index = k;
      have_best = true;
    }
  }
  if (!have_best) {
    throw DegenerateModelError("all " + std::to_string(config.restarts_k) +
                               " restarts ended in a degenerate model");
  }
  best.restarts = std::move(restarts);
  return best;
}

}  // namespace delayrank
