#ifndef DEMPOOL_COMMON_HPP
#define DEMPOOL_COMMON_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dempool {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Error categories. The CLI maps these one-to-one onto process exit codes,
/// so the numeric values are part of the external interface.
enum class errc : int {
  io_error = 2,
  parse_error = 3,
  non_finite_entry = 4,
  dimension_mismatch = 5,
  zero_row = 6,
  zero_row_sum = 7,
  non_positive_kernel = 8,
  invalid_argument = 9,
  encoding_mismatch = 10,
  zero_descriptor = 11,
  zero_matrix = 12,
  single_class = 13,
  convergence_failure = 14,
  numeric_error = 15,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

/// Copies the upper triangle onto the lower one so the result is symmetric
/// bit-for-bit, not merely up to rounding.
template <typename Scalar>
void mirror_upper(Matrix<Scalar>& m) {
  m.template triangularView<Eigen::StrictlyLower>() = m.transpose();
}

template <typename Derived>
typename Derived::Scalar max_abs_asymmetry(
    const Eigen::MatrixBase<Derived>& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

/// vec(M) in row-major order; the fixed vectorization convention for
/// explicit second-order descriptors.
template <typename Scalar>
Vector<Scalar> vec_row_major(const Matrix<Scalar>& m) {
  Matrix<Scalar> t = m.transpose();
  return Eigen::Map<const Vector<Scalar>>(t.data(), t.size());
}

/// Inverse of vec_row_major for a square matrix of side d.
template <typename Scalar>
Matrix<Scalar> unvec_row_major(const Vector<Scalar>& v, Index d) {
  require(v.size() == d * d, errc::dimension_mismatch,
          "unvec: vector length does not match d*d");
  using RowMajor =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(v.data(), d, d);
}

}  // namespace dempool

#endif  // DEMPOOL_COMMON_HPP
