#pragma once

// The smooth rank-1 signal model x = H^dagger(sigma a b^T), its penalized
// least-squares objective and the observation mask it is fitted through.

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <utility>

#include "delayrank/embedding.hpp"
#include "delayrank/errors.hpp"

namespace delayrank {

/// First-difference operator L of size (m-1) x m, applied matrix-free.
class DifferenceOperator {
 public:
  explicit DifferenceOperator(Index size) : size_(size) {
    if (size < 1) throw DimensionError("difference operator needs size >= 1");
  }

  Index size() const { return size_; }

  template <typename Derived>
  Vector<typename Derived::Scalar> apply(const Eigen::MatrixBase<Derived>& v) const {
    check(v.size());
    return v.tail(size_ - 1) - v.head(size_ - 1);
  }

  template <typename Derived>
  Vector<typename Derived::Scalar> apply_transpose(const Eigen::MatrixBase<Derived>& d) const {
    if (d.size() != size_ - 1) throw DimensionError("difference transpose: size mismatch");
    Vector<typename Derived::Scalar> out = Vector<typename Derived::Scalar>::Zero(size_);
    out.tail(size_ - 1) += d;
    out.head(size_ - 1) -= d;
    return out;
  }

  /// L^T L v (the path-graph Laplacian).
  template <typename Derived>
  Vector<typename Derived::Scalar> apply_gram(const Eigen::MatrixBase<Derived>& v) const {
    return apply_transpose(apply(v));
  }

  template <typename Derived>
  typename Derived::Scalar penalty(const Eigen::MatrixBase<Derived>& v) const {
    return apply(v).squaredNorm();
  }

 private:
  void check(Index n) const {
    if (n != size_) {
      throw DimensionError("difference operator of size " + std::to_string(size_) +
                           " applied to length " + std::to_string(n));
    }
  }

  Index size_;
};

/// Index set of observed samples; P_Omega zeroes everything else.
class ObservationMask {
 public:
  using Flags = Eigen::Array<bool, Eigen::Dynamic, 1>;

  explicit ObservationMask(Flags observed) : observed_(std::move(observed)) {}

  static ObservationMask full(Index n) { return ObservationMask(Flags::Constant(n, true)); }

  Index size() const { return observed_.size(); }
  Index count() const { return observed_.count(); }
  bool is_full() const { return observed_.all(); }
  bool operator()(Index i) const { return observed_(i); }
  const Flags& flags() const { return observed_; }

  template <typename Derived>
  Vector<typename Derived::Scalar> apply(const Eigen::MatrixBase<Derived>& v) const {
    using Scalar = typename Derived::Scalar;
    if (v.size() != size()) throw DimensionError("mask/vector length mismatch");
    return observed_.select(v.derived().array(), Scalar(0)).matrix();
  }

  bool operator==(const ObservationMask& other) const {
    return size() == other.size() && (observed_ == other.observed_).all();
  }

 private:
  Flags observed_;
};

struct Hyperparams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Index tau = 1;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
};

/// lambda_a = lambda1 |Omega| / (T N), lambda_b = lambda2 |Omega| / (tau N).
inline Hyperparams scale_hyperparameters(double lambda1, double lambda2,
                                         const ObservationMask& mask,
                                         const EmbeddingGeometry& geom) {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw ParameterError("smoothness weights must be nonnegative");
  }
  if (mask.size() != geom.n()) throw DimensionError("mask length differs from geometry");
  if (mask.count() == 0) throw ParameterError("observation mask is empty");
  const double omega = static_cast<double>(mask.count());
  const double n = static_cast<double>(geom.n());
  Hyperparams hp;
  hp.lambda1 = lambda1;
  hp.lambda2 = lambda2;
  hp.tau = geom.tau();
  hp.lambda_a = lambda1 * omega / (static_cast<double>(geom.rows()) * n);
  hp.lambda_b = lambda2 * omega / (static_cast<double>(geom.tau()) * n);
  return hp;
}

/// Factors a (length T), b (length tau) and scale sigma.
template <typename Scalar>
struct Rank1Model {
  Vector<Scalar> a;
  Vector<Scalar> b;
  Scalar sigma = Scalar(0);

  EmbeddingGeometry geometry() const { return EmbeddingGeometry::from_factors(a.size(), b.size()); }
};

template <typename Scalar>
Vector<Scalar> reconstruct(const Rank1Model<Scalar>& model) {
  return model.sigma * inverse_embed_rank1(model.a, model.b);
}

/// ||P(y - x)||^2 + lambda_a ||L a||^2 + lambda_b ||L b||^2.
template <typename Scalar, typename Derived>
Scalar objective(const Rank1Model<Scalar>& model, const Eigen::MatrixBase<Derived>& y,
                 const ObservationMask& mask, const Hyperparams& hp) {
  const auto geom = model.geometry();
  if (y.size() != geom.n() || mask.size() != geom.n()) {
    throw DimensionError("objective: signal/mask length differs from model geometry");
  }
  if (mask.count() == 0) throw ParameterError("objective: observation mask is empty");
  const Scalar fit = mask.apply(y - reconstruct(model)).squaredNorm();
  const Scalar pen_a = DifferenceOperator(model.a.size()).penalty(model.a);
  const Scalar pen_b = DifferenceOperator(model.b.size()).penalty(model.b);
  return fit + Scalar(hp.lambda_a) * pen_a + Scalar(hp.lambda_b) * pen_b;
}

}  // namespace delayrank
