#ifndef DEMPOOL_KERNEL_HPP
#define DEMPOOL_KERNEL_HPP

#include "dempool/common.hpp"
#include "dempool/features.hpp"

namespace dempool {

/// Which encoder a kernel matrix represents: dot products of the raw
/// features (first) or of their outer products (second).
enum class KernelOrder { first, second };

template <typename Scalar>
struct KernelMatrix {
  Matrix<Scalar> values;  // n x n, symmetric
  KernelOrder order;

  Index size() const { return values.rows(); }
};

/// K[i][j] = x_i . x_j. O(n^2 d) time, O(n^2 + nd) space. The upper triangle
/// is computed and mirrored, so the result is exactly symmetric.
template <typename Scalar>
KernelMatrix<Scalar> raw_kernel(const FeatureSet<Scalar>& fs) {
  const Index n = fs.count();
  Matrix<Scalar> k = Matrix<Scalar>::Zero(n, n);
  k.template selfadjointView<Eigen::Upper>().rankUpdate(fs.data);
  mirror_upper(k);
  return KernelMatrix<Scalar>{std::move(k), KernelOrder::first};
}

/// K[i][j] = (x_i . x_j)^2, the kernel of the outer-product encoder.
/// Equals the elementwise square of raw_kernel; no d^2 vector is ever
/// materialized. Entries are non-negative by construction.
template <typename Scalar>
KernelMatrix<Scalar> second_order_kernel(const FeatureSet<Scalar>& fs) {
  KernelMatrix<Scalar> k = raw_kernel(fs);
  k.values = k.values.array().square().matrix();
  k.order = KernelOrder::second;
  return k;
}

/// Zeroes out negative entries. Used to make first-order kernels admissible
/// for the Sinkhorn solver; idempotent, preserves symmetry.
template <typename Scalar>
KernelMatrix<Scalar> clamp_negatives(KernelMatrix<Scalar> k) {
  k.values = k.values.cwiseMax(Scalar(0));
  return k;
}

}  // namespace dempool

#endif  // DEMPOOL_KERNEL_HPP
