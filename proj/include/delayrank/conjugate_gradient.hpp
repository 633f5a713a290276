#pragma once

#include <Eigen/Core>

#include <cmath>

#include "delayrank/errors.hpp"

namespace delayrank {

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Matrix-free conjugate gradient for a symmetric positive (semi)definite
/// operator. `x` holds the warm start on entry and the solution on exit.
/// Convergence is ||b - A x|| <= tol * ||b||; for b = 0 the initial residual
/// is used as reference instead. Without convergence, x is the iterate with
/// the smallest residual seen.
template <typename Apply>
CgResult conjugate_gradient(const Apply& apply, const Eigen::VectorXd& rhs, Eigen::VectorXd& x,
                            double tol, int max_iters) {
  Eigen::VectorXd r = rhs - apply(x);
  double rr = r.squaredNorm();
  double reference = rhs.norm();
  if (reference == 0.0) reference = std::sqrt(rr);

  CgResult result;
  if (reference == 0.0 || std::sqrt(rr) <= tol * reference) {
    result.relative_residual = reference == 0.0 ? 0.0 : std::sqrt(rr) / reference;
    result.converged = true;
    return result;
  }

  Eigen::VectorXd p = r;
  Eigen::VectorXd best_x = x;
  double best_residual = std::sqrt(rr) / reference;
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXd q = apply(p);
    const double curvature = p.dot(q);
    if (!(curvature > 0.0)) {
      // p lies in the null space while the residual is still large.
      throw SingularSystemError("conjugate gradient: operator is singular along search direction");
    }
    const double alpha = rr / curvature;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    const double rr_next = r.squaredNorm();
    result.iterations = it;
    result.relative_residual = std::sqrt(rr_next) / reference;
    if (result.relative_residual <= tol) {
      result.converged = true;
      return result;
    }
    if (result.relative_residual < best_residual) {
      best_residual = result.relative_residual;
      best_x = x;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  x = best_x;
  result.relative_residual = best_residual;
  return result;
}

}  // namespace delayrank
