#ifndef DEMPOOL_SPECTRAL_HPP
#define DEMPOOL_SPECTRAL_HPP

#include <cmath>

#include "dempool/common.hpp"
#include "dempool/features.hpp"

namespace dempool {

/// Eigendecomposition of a symmetric PSD matrix with eigenvalues sorted
/// descending. Negative eigenvalues within roundoff of zero are clamped.
template <typename Scalar>
struct SpectralDecomposition {
  Vector<Scalar> eigenvalues;   // descending, all >= 0
  Matrix<Scalar> eigenvectors;  // orthonormal columns, matching order
};

namespace detail {

template <typename Derived>
void check_symmetric(const Eigen::MatrixBase<Derived>& a, const char* who) {
  using Scalar = typename Derived::Scalar;
  require(a.rows() == a.cols(), errc::dimension_mismatch,
          std::string(who) + ": matrix must be square");
  const Scalar scale = std::max(Scalar(1), a.cwiseAbs().maxCoeff());
  require(max_abs_asymmetry(a) <= Scalar(1e-10) * scale,
          errc::invalid_argument,
          std::string(who) + ": matrix is not symmetric");
}

}  // namespace detail

template <typename Derived>
SpectralDecomposition<typename Derived::Scalar> eig_sym(
    const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  detail::check_symmetric(a, "eig_sym");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(a);
  require(solver.info() == Eigen::Success, errc::convergence_failure,
          "eig_sym: eigensolver did not converge");

  // Eigen returns ascending order; flip to descending.
  Vector<Scalar> lambda = solver.eigenvalues().reverse();
  Matrix<Scalar> u = solver.eigenvectors().rowwise().reverse();

  const Scalar top = std::max(lambda[0], Scalar(0));
  require(lambda[lambda.size() - 1] >= Scalar(-1e-10) * std::max(top, Scalar(1)),
          errc::invalid_argument,
          "eig_sym: matrix has eigenvalues below the PSD tolerance");
  lambda = lambda.cwiseMax(Scalar(0));
  return SpectralDecomposition<Scalar>{std::move(lambda), std::move(u)};
}

/// A^p = U diag(lambda_i^p) U^T for p in (0,1]. Zero eigenvalues map to zero.
template <typename Scalar>
Matrix<Scalar> matrix_power(const SpectralDecomposition<Scalar>& eig,
                            Scalar p) {
  require(p > Scalar(0) && p <= Scalar(1), errc::invalid_argument,
          "matrix power exponent must lie in (0,1]");
  const Vector<Scalar> powered = eig.eigenvalues.array().pow(p);
  Matrix<Scalar> result =
      eig.eigenvectors * powered.asDiagonal() * eig.eigenvectors.transpose();
  mirror_upper(result);
  return result;
}

template <typename Derived>
Matrix<typename Derived::Scalar> matrix_power(
    const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar p) {
  using Scalar = typename Derived::Scalar;
  require(p > Scalar(0) && p <= Scalar(1), errc::invalid_argument,
          "matrix power exponent must lie in (0,1]");
  if (p == Scalar(1)) return a;
  return matrix_power(eig_sym(a), p);
}

/// Coupled Newton-Schulz iteration for the matrix square root:
/// Y <- Y(3I - ZY)/2, Z <- (3I - ZY)Z/2 on A pre-scaled by its trace, with a
/// final rescale by sqrt(trace). Converges when |A/trace(A) - I| < 1, which
/// trace scaling ensures for nonzero PSD input.
template <typename Derived>
Matrix<typename Derived::Scalar> newton_schulz_sqrt(
    const Eigen::MatrixBase<Derived>& a_expr, int iters) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> a = a_expr;
  detail::check_symmetric(a, "newton_schulz_sqrt");
  require(iters >= 0, errc::invalid_argument, "iteration count must be >= 0");
  require(!a.isZero(Scalar(0)), errc::zero_matrix,
          "cannot take the square root of the zero matrix");
  const Scalar trace = a.trace();
  require(trace > Scalar(0), errc::invalid_argument,
          "newton_schulz_sqrt: trace must be positive for a PSD matrix");

  const Index d = a.rows();
  const Matrix<Scalar> identity = Matrix<Scalar>::Identity(d, d);
  Matrix<Scalar> y = a / trace;
  Matrix<Scalar> z = identity;
  for (int t = 0; t < iters; ++t) {
    const Matrix<Scalar> m = Scalar(0.5) * (Scalar(3) * identity - z * y);
    y = y * m;
    z = m * z;
  }
  Matrix<Scalar> root = std::sqrt(trace) * y;
  root = Scalar(0.5) * (root + root.transpose().eval());
  return root;
}

template <typename Scalar>
struct SpanCheck {
  bool in_span;
  Scalar residual;              // Frobenius residual of the least-squares fit
  Vector<Scalar> coefficients;  // best c in min |sum_i c_i x_i x_i^T - M|_F
};

/// Least-squares test of whether M lies in the linear span of the features'
/// outer products. Rank-deficient feature sets are handled (minimum-norm
/// solution).
template <typename Derived>
SpanCheck<typename Derived::Scalar> in_span_of_outer_products(
    const Eigen::MatrixBase<Derived>& m_expr,
    const FeatureSet<typename Derived::Scalar>& fs,
    typename Derived::Scalar tol) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> m = m_expr;
  const Index d = fs.dim();
  require(m.rows() == d && m.cols() == d, errc::dimension_mismatch,
          "matrix side does not match feature dim");
  const Index n = fs.count();

  Matrix<Scalar> basis(d * d, n);
  for (Index i = 0; i < n; ++i) {
    const Matrix<Scalar> outer = fs.data.row(i).transpose() * fs.data.row(i);
    basis.col(i) = Eigen::Map<const Vector<Scalar>>(outer.data(), d * d);
  }
  const Vector<Scalar> target =
      Eigen::Map<const Vector<Scalar>>(m.data(), d * d);

  Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>> cod(basis);
  Vector<Scalar> coeff = cod.solve(target);
  const Scalar residual = (basis * coeff - target).norm();
  const bool in_span = residual <= tol * m.norm();
  return SpanCheck<Scalar>{in_span, residual, std::move(coeff)};
}

}  // namespace dempool

#endif  // DEMPOOL_SPECTRAL_HPP
