#pragma once

// Delay embedding (Hankelization) of a signal into a T x tau matrix and its
// pseudo-inverse, which averages anti-diagonals. All indices are zero-based:
// cell (i, j) of the embedded matrix maps to signal sample i - tau + 1 + j.

#include <Eigen/Core>

#include <string>

#include "delayrank/errors.hpp"

namespace delayrank {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Signal length n, window tau and embedded row count n + tau - 1.
class EmbeddingGeometry {
 public:
  EmbeddingGeometry(Index n, Index tau) : n_(n), tau_(tau) {
    if (tau < 1 || tau > n) {
      throw DimensionError("embedding window tau=" + std::to_string(tau) +
                           " must lie in [1, " + std::to_string(n) + "]");
    }
  }

  /// Geometry implied by factor lengths (a has n + tau - 1 entries).
  static EmbeddingGeometry from_factors(Index a_size, Index b_size) {
    if (b_size < 1 || a_size < b_size) {
      throw DimensionError("factor lengths " + std::to_string(a_size) + " and " +
                           std::to_string(b_size) + " do not form an embedding");
    }
    return EmbeddingGeometry(a_size - b_size + 1, b_size);
  }

  Index n() const { return n_; }
  Index tau() const { return tau_; }
  Index rows() const { return n_ + tau_ - 1; }

  /// Signal index of embedded cell (i, j); may fall outside [0, n).
  Index signal_index(Index i, Index j) const { return i - tau_ + 1 + j; }

  bool operator==(const EmbeddingGeometry&) const = default;

 private:
  Index n_;
  Index tau_;
};

/// A delay-embedded matrix. Corner cells outside the anti-diagonal band
/// carry no signal sample; they hold zero and are flagged in `defined`.
template <typename Scalar>
struct EmbeddedMatrix {
  EmbeddingGeometry geometry;
  Matrix<Scalar> values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
};

template <typename Derived>
EmbeddedMatrix<typename Derived::Scalar> delay_embed(const Eigen::MatrixBase<Derived>& y,
                                                     Index tau) {
  using Scalar = typename Derived::Scalar;
  if (y.cols() != 1) throw DimensionError("delay_embed expects a column vector");
  const EmbeddingGeometry geom(y.size(), tau);

  EmbeddedMatrix<Scalar> out{geom, Matrix<Scalar>::Zero(geom.rows(), tau),
                             Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
                                 geom.rows(), tau, false)};
  for (Index j = 0; j < tau; ++j) {
    for (Index i = 0; i < geom.rows(); ++i) {
      const Index s = geom.signal_index(i, j);
      if (s >= 0 && s < geom.n()) {
        out.values(i, j) = y(s);
        out.defined(i, j) = true;
      }
    }
  }
  return out;
}

/// Averages the tau cells of each anti-diagonal that maps onto the signal.
template <typename Derived>
Vector<typename Derived::Scalar> inverse_delay_embed(const Eigen::MatrixBase<Derived>& x,
                                                     const EmbeddingGeometry& geom) {
  using Scalar = typename Derived::Scalar;
  if (x.rows() != geom.rows() || x.cols() != geom.tau()) {
    throw DimensionError("inverse_delay_embed: matrix is " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", geometry expects " +
                         std::to_string(geom.rows()) + "x" + std::to_string(geom.tau()));
  }
  const Index tau = geom.tau();
  Vector<Scalar> out = Vector<Scalar>::Zero(geom.n());
  for (Index t = 0; t < tau; ++t) {
    // Column t contributes rows n + tau - 1 - t for n = 0..N-1.
    out += x.col(t).segment(tau - 1 - t, geom.n());
  }
  return out / static_cast<Scalar>(tau);
}

template <typename Scalar>
Vector<Scalar> inverse_delay_embed(const EmbeddedMatrix<Scalar>& x) {
  return inverse_delay_embed(x.values, x.geometry);
}

/// Inverse embedding of the outer product a b^T without forming it: the
/// valid part of the linear convolution a * b, scaled by 1/tau.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> inverse_embed_rank1(const Eigen::MatrixBase<DerivedA>& a,
                                                      const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const auto geom = EmbeddingGeometry::from_factors(a.size(), b.size());
  const Index tau = geom.tau();
  Vector<Scalar> out = Vector<Scalar>::Zero(geom.n());
  for (Index t = 0; t < tau; ++t) {
    out += b(t) * a.segment(tau - 1 - t, geom.n());
  }
  return out / static_cast<Scalar>(tau);
}

/// Adjoint of a -> inverse_embed_rank1(a, b). Result has length n + tau - 1.
template <typename DerivedR, typename DerivedB>
Vector<typename DerivedR::Scalar> adjoint_wrt_a(const Eigen::MatrixBase<DerivedR>& r,
                                                const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedR::Scalar;
  const EmbeddingGeometry geom(r.size(), b.size());
  const Index tau = geom.tau();
  Vector<Scalar> out = Vector<Scalar>::Zero(geom.rows());
  for (Index t = 0; t < tau; ++t) {
    out.segment(tau - 1 - t, geom.n()) += b(t) * r;
  }
  return out / static_cast<Scalar>(tau);
}

/// Adjoint of b -> inverse_embed_rank1(a, b). Result has length tau.
template <typename DerivedR, typename DerivedA>
Vector<typename DerivedR::Scalar> adjoint_wrt_b(const Eigen::MatrixBase<DerivedR>& r,
                                                const Eigen::MatrixBase<DerivedA>& a) {
  using Scalar = typename DerivedR::Scalar;
  if (a.size() < r.size()) {
    throw DimensionError("adjoint_wrt_b: factor a shorter than residual");
  }
  const EmbeddingGeometry geom(r.size(), a.size() - r.size() + 1);
  const Index tau = geom.tau();
  Vector<Scalar> out(tau);
  for (Index t = 0; t < tau; ++t) {
    out(t) = r.dot(a.segment(tau - 1 - t, geom.n()));
  }
  return out / static_cast<Scalar>(tau);
}

}  // namespace delayrank
