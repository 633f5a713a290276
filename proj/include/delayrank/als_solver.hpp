#pragma once

// Alternating least squares with unit-norm projections for the smooth rank-1
// model, plus the Monte-Carlo outer loop over random initializations.

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

#include "delayrank/rank1_model.hpp"

namespace delayrank {

/// How each factor's normal equation is solved. `direct` assembles the
/// banded normal matrix and factors it, falling back to conjugate gradient
/// when the matrix is singular; `conjugate_gradient` stays matrix-free.
enum class InnerSolver { direct, conjugate_gradient };

struct SolverConfig {
  int max_outer_iters = 1000;
  /// Relative change of the objective between full iterations.
  double outer_tol = 1e-9;
  /// Relative residual of each inner normal-equation solve.
  double cg_tol = 1e-10;
  /// 0 selects min(10 * max(T, tau), 2000).
  int cg_max_iters = 0;
  int restarts_k = 1;
  std::uint64_t rng_seed = 0;
  InnerSolver inner_solver = InnerSolver::direct;

  void validate() const;
  int cg_iteration_limit(const EmbeddingGeometry& geom) const;
};

/// Unnormalized solution of one factor's regularized normal equation.
struct FactorUpdate {
  Eigen::VectorXd value;
  /// Zero when the direct factorization succeeded.
  int cg_iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

enum class SolverStatus { converged, max_iterations, degenerate };

const char* to_string(SolverStatus status);

struct RestartRecord {
  int index = 0;
  SolverStatus status = SolverStatus::max_iterations;
  std::vector<double> objective_trajectory;
  double final_objective() const { return objective_trajectory.back(); }
};

struct SolverReport {
  /// Objective at initialization followed by one value per full iteration.
  std::vector<double> objective_trajectory;
  Rank1Model<double> final_model;
  int restart_index = 0;
  bool converged = false;
  int iterations_used = 0;
  SolverStatus status = SolverStatus::max_iterations;
  /// Inner solves that stopped at the iteration cap.
  int cg_warnings = 0;
  /// Factor updates that returned zero and were not projected.
  int degenerate_updates = 0;
  /// Per-restart history; filled by monte_carlo_solve only.
  std::vector<RestartRecord> restarts;

  double final_objective() const { return objective_trajectory.back(); }
};

/// Solves (sigma^2 M_b^T P M_b + lambda_a L^T L) a = sigma M_b^T P y, where
/// M_b a = inverse_embed_rank1(a, b). Iterative solves warm-start from model.a.
FactorUpdate update_a(const Rank1Model<double>& model, const Eigen::VectorXd& y,
                      const ObservationMask& mask, const Hyperparams& hp,
                      const SolverConfig& config);

/// Counterpart of update_a for b with lambda_b.
FactorUpdate update_b(const Rank1Model<double>& model, const Eigen::VectorXd& y,
                      const ObservationMask& mask, const Hyperparams& hp,
                      const SolverConfig& config);

/// Least-squares scale <y, P z> / ||P z||^2 with z = inverse_embed_rank1(a, b).
/// Throws DegenerateModelError when P z vanishes.
double update_sigma(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& y,
                    const ObservationMask& mask);

SolverReport als_solve(const Eigen::VectorXd& y, const ObservationMask& mask,
                       const Hyperparams& hp, const SolverConfig& config,
                       const Eigen::VectorXd& a0, const Eigen::VectorXd& b0);

/// Gaussian initial factors for restart `restart` under `seed`.
std::pair<Eigen::VectorXd, Eigen::VectorXd> random_init(const EmbeddingGeometry& geom,
                                                        std::uint64_t seed, int restart);

/// Runs config.restarts_k independent ALS solves and keeps the one with the
/// lowest final objective (lowest index on ties).
SolverReport monte_carlo_solve(const Eigen::VectorXd& y, const ObservationMask& mask,
                               const Hyperparams& hp, const SolverConfig& config);

}  // namespace delayrank
