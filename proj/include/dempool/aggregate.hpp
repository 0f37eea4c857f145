#ifndef DEMPOOL_AGGREGATE_HPP
#define DEMPOOL_AGGREGATE_HPP

#include <cmath>

#include "dempool/common.hpp"
#include "dempool/features.hpp"
#include "dempool/sinkhorn.hpp"

namespace dempool {

enum class Encoding { first, second_explicit, second_sketch };

/// A global descriptor: length d (first order), d^2 (explicit second order)
/// or k (sketched second order).
template <typename Scalar>
struct Descriptor {
  Vector<Scalar> values;
  Encoding encoding;
  bool normalized = false;
};

template <typename Scalar>
Vector<Scalar> uniform_weights(Index n) {
  return Vector<Scalar>::Ones(n);
}

/// A_alpha = sum_i alpha_i x_i x_i^T as an exactly symmetric d x d matrix.
template <typename Scalar>
Matrix<Scalar> second_order_matrix(const FeatureSet<Scalar>& fs,
                                   const Vector<Scalar>& alpha) {
  require(alpha.size() == fs.count(), errc::dimension_mismatch,
          "weight vector length does not match feature count");
  const Matrix<Scalar> weighted = alpha.asDiagonal() * fs.data;
  Matrix<Scalar> a = fs.data.transpose() * weighted;
  mirror_upper(a);
  return a;
}

template <typename Scalar>
Matrix<Scalar> second_order_matrix(const FeatureSet<Scalar>& fs) {
  return second_order_matrix(fs, uniform_weights<Scalar>(fs.count()));
}

/// Explicit second-order descriptor: vec(A_alpha) in row-major order.
template <typename Scalar>
Descriptor<Scalar> aggregate_second_order(const FeatureSet<Scalar>& fs,
                                          const Vector<Scalar>& alpha) {
  return Descriptor<Scalar>{vec_row_major(second_order_matrix(fs, alpha)),
                            Encoding::second_explicit, false};
}

template <typename Scalar>
Descriptor<Scalar> aggregate_second_order(const FeatureSet<Scalar>& fs,
                                          const DemocraticWeights<Scalar>& w) {
  return aggregate_second_order(fs, w.alpha);
}

template <typename Scalar>
Descriptor<Scalar> aggregate_second_order(const FeatureSet<Scalar>& fs) {
  return aggregate_second_order(fs, uniform_weights<Scalar>(fs.count()));
}

/// First-order descriptor: sum_i alpha_i x_i.
template <typename Scalar>
Descriptor<Scalar> aggregate_first_order(const FeatureSet<Scalar>& fs,
                                         const Vector<Scalar>& alpha) {
  require(alpha.size() == fs.count(), errc::dimension_mismatch,
          "weight vector length does not match feature count");
  return Descriptor<Scalar>{fs.data.transpose() * alpha, Encoding::first,
                            false};
}

template <typename Scalar>
Descriptor<Scalar> aggregate_first_order(const FeatureSet<Scalar>& fs,
                                         const DemocraticWeights<Scalar>& w) {
  return aggregate_first_order(fs, w.alpha);
}

template <typename Scalar>
Descriptor<Scalar> aggregate_first_order(const FeatureSet<Scalar>& fs) {
  return aggregate_first_order(fs, uniform_weights<Scalar>(fs.count()));
}

/// Contribution of feature index to the descriptor: alpha_i phi(x_i)^T xi.
/// For the explicit second-order encoding this is evaluated as the quadratic
/// form alpha_i x_i^T M x_i, avoiding any d^2 intermediate.
template <typename Scalar>
Scalar contribution(Index index, const FeatureSet<Scalar>& fs,
                    const Vector<Scalar>& alpha, const Descriptor<Scalar>& xi) {
  require(index >= 0 && index < fs.count(), errc::invalid_argument,
          "feature index out of range");
  require(alpha.size() == fs.count(), errc::dimension_mismatch,
          "weight vector length does not match feature count");
  const Index d = fs.dim();
  switch (xi.encoding) {
    case Encoding::first:
      require(xi.values.size() == d, errc::dimension_mismatch,
              "first-order descriptor length does not match feature dim");
      return alpha[index] * fs.data.row(index).dot(xi.values);
    case Encoding::second_explicit: {
      require(xi.values.size() == d * d, errc::dimension_mismatch,
              "second-order descriptor length does not match d^2");
      const Matrix<Scalar> m = unvec_row_major(xi.values, d);
      return alpha[index] * fs.data.row(index) * m *
             fs.data.row(index).transpose();
    }
    case Encoding::second_sketch:
      fail(errc::encoding_mismatch,
           "contribution for sketched descriptors needs the sketch config; "
           "see sketch_contribution");
  }
  fail(errc::invalid_argument, "unknown encoding");
}

/// Elementwise signed square root followed by l2 normalization.
template <typename Scalar>
Descriptor<Scalar> postprocess(Descriptor<Scalar> desc) {
  Vector<Scalar>& v = desc.values;
  v = v.array().sign() * v.array().abs().sqrt();
  const Scalar norm = v.norm();
  require(norm > Scalar(0), errc::zero_descriptor,
          "cannot normalize an all-zero descriptor");
  v /= norm;
  desc.normalized = true;
  return desc;
}

}  // namespace dempool

#endif  // DEMPOOL_AGGREGATE_HPP
