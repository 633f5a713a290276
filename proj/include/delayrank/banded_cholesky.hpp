#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "delayrank/errors.hpp"

namespace delayrank {

using BandStorage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Symmetric positive definite matrix with `bandwidth` sub-diagonals,
/// stored row-wise: band(i, k) = A(i, i - bandwidth + k) for k <= bandwidth.
class SymmetricBand {
 public:
  SymmetricBand(Eigen::Index n, Eigen::Index bandwidth)
      : bandwidth_(std::min(bandwidth, n > 0 ? n - 1 : 0)),
        band_(BandStorage::Zero(n, bandwidth_ + 1)) {}

  Eigen::Index size() const { return band_.rows(); }
  Eigen::Index bandwidth() const { return bandwidth_; }

  /// Entry (i, j) with j <= i and i - j <= bandwidth.
  double& lower(Eigen::Index i, Eigen::Index j) { return band_(i, j - i + bandwidth_); }
  double lower(Eigen::Index i, Eigen::Index j) const { return band_(i, j - i + bandwidth_); }

  void add_diagonal(Eigen::Index i, double v) { band_(i, bandwidth_) += v; }

  /// Adds w * (L^T L) for the first-difference operator L.
  void add_difference_gram(double w) {
    const Eigen::Index n = size();
    if (w == 0.0 || n < 2) return;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double degree = (i == 0 || i == n - 1) ? 1.0 : 2.0;
      add_diagonal(i, w * degree);
      if (i > 0 && bandwidth_ >= 1) lower(i, i - 1) -= w;
    }
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    const Eigen::Index n = size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out(i) += band_(i, bandwidth_) * x(i);
      for (Eigen::Index j = std::max<Eigen::Index>(0, i - bandwidth_); j < i; ++j) {
        const double v = lower(i, j);
        out(i) += v * x(j);
        out(j) += v * x(i);
      }
    }
    return out;
  }

  const BandStorage& storage() const { return band_; }
  BandStorage& storage() { return band_; }

 private:
  Eigen::Index bandwidth_;
  BandStorage band_;
};

/// Cholesky factor L L^T of a SymmetricBand, computed in place of a copy.
class BandedCholesky {
 public:
  /// Returns false (and leaves the object unusable) when the matrix is not
  /// numerically positive definite.
  bool compute(const SymmetricBand& a) {
    factor_ = a;
    ok_ = false;
    const Eigen::Index n = factor_.size();
    const Eigen::Index bw = factor_.bandwidth();
    BandStorage& f = factor_.storage();
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index first = std::max<Eigen::Index>(0, j - bw);
      const Eigen::Index len = j - first;
      // Row j of L, columns first..j-1, is contiguous in band storage.
      const double diag =
          f(j, bw) - f.row(j).segment(first - j + bw, len).squaredNorm();
      if (!(diag > 0.0) || !std::isfinite(diag)) return false;
      const double ljj = std::sqrt(diag);
      f(j, bw) = ljj;
      const Eigen::Index last = std::min(n - 1, j + bw);
      for (Eigen::Index i = j + 1; i <= last; ++i) {
        const Eigen::Index start = std::max<Eigen::Index>(0, i - bw);
        const Eigen::Index overlap = j - start;
        double s = f(i, j - i + bw);
        if (overlap > 0) {
          s -= f.row(i).segment(start - i + bw, overlap).dot(f.row(j).segment(start - j + bw, overlap));
        }
        f(i, j - i + bw) = s / ljj;
      }
    }
    ok_ = true;
    return true;
  }

  bool ok() const { return ok_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (!ok_) throw SingularSystemError("banded Cholesky: no valid factorization");
    const Eigen::Index n = factor_.size();
    const Eigen::Index bw = factor_.bandwidth();
    const BandStorage& f = factor_.storage();
    Eigen::VectorXd x = rhs;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index start = std::max<Eigen::Index>(0, i - bw);
      const Eigen::Index len = i - start;
      if (len > 0) x(i) -= f.row(i).segment(start - i + bw, len).dot(x.segment(start, len));
      x(i) /= f(i, bw);
    }
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      x(i) /= f(i, bw);
      const Eigen::Index start = std::max<Eigen::Index>(0, i - bw);
      for (Eigen::Index k = start; k < i; ++k) x(k) -= f(i, k - i + bw) * x(i);
    }
    return x;
  }

 private:
  SymmetricBand factor_{0, 0};
  bool ok_ = false;
};

}  // namespace delayrank
