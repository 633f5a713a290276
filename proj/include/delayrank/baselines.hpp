#pragma once

// Reference reconstructors: quadratic-variation regularization, natural
// cubic-spline interpolation and masked orthogonal matching pursuit over a
// Gabor dictionary.

#include <Eigen/Core>

#include <vector>

#include "delayrank/rank1_model.hpp"

namespace delayrank {

/// Minimizes ||P(y - x)||^2 + lambda ||L x||^2 by solving the tridiagonal
/// system (P + lambda L^T L) x = P y.
Eigen::VectorXd qv_reconstruct(const Eigen::VectorXd& y, const ObservationMask& mask,
                               double lambda);

/// Natural cubic spline through the observed samples, evaluated at every
/// index. Outside the observed range the boundary piece is extended.
Eigen::VectorXd spline_reconstruct(const Eigen::VectorXd& y, const ObservationMask& mask);

/// Redundant Gabor dictionary with unit-norm columns. For redundancy rho it
/// holds rho*N/2 Gaussian-windowed cosines at frequencies k/(rho N) followed by
/// as many sines at (k + 1/2)/(rho N). Window and phase are both centered on
/// (N - 1)/2; the window has standard deviation N/4.
class GaborDictionary {
 public:
  GaborDictionary(Index n, double redundancy = 2.0);

  Index n() const { return atoms_.rows(); }
  double redundancy() const { return redundancy_; }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  Index size() const { return atoms_.cols(); }

 private:
  double redundancy_;
  Eigen::MatrixXd atoms_;
};

struct SparseCode {
  std::vector<Index> support;
  Eigen::VectorXd coefficients;
  /// ||P(y - D w)||^2 at termination.
  double residual_norm_sq = 0.0;
  /// Masked squared residual before the first and after every selection.
  std::vector<double> residual_history;
};

struct OmpResult {
  Eigen::VectorXd signal;
  SparseCode code;
};

/// Greedy sparse coding of the observed samples. Atoms are ranked by
/// |<r, P d>| / ||P d||; coefficients are refit by least squares on the
/// observed rows after every selection. Stops once the masked squared
/// residual is <= epsilon or ceil(N/4) atoms are in use.
OmpResult omp_reconstruct(const Eigen::VectorXd& y, const ObservationMask& mask,
                          const GaborDictionary& dict, double epsilon);

}  // namespace delayrank
