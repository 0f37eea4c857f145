#ifndef DEMPOOL_SINKHORN_HPP
#define DEMPOOL_SINKHORN_HPP

#include "dempool/common.hpp"
#include "dempool/kernel.hpp"

namespace dempool {

template <typename Scalar>
struct SinkhornConfig {
  Scalar tau = Scalar(0.5);  // damping exponent in (0,1]; 1 is oscillation-prone
  int iterations = 10;
  Scalar gamma = Scalar(0);  // 0 = fully democratic, 1 = sum pooling
  Scalar zero_division_epsilon = Scalar(1e-12);
};

template <typename Scalar>
struct DemocraticWeights {
  Vector<Scalar> alpha;  // per-feature positive weights
  Scalar residual;       // max_i |(diag(a) K diag(a) 1)_i - target_i| / target_i
  int iterations_run;
};

template <typename Scalar>
void validate(const SinkhornConfig<Scalar>& cfg) {
  require(cfg.tau > Scalar(0) && cfg.tau <= Scalar(1), errc::invalid_argument,
          "tau must lie in (0,1]");
  require(cfg.iterations >= 1, errc::invalid_argument,
          "iterations must be >= 1");
  require(cfg.gamma >= Scalar(0) && cfg.gamma <= Scalar(1),
          errc::invalid_argument, "gamma must lie in [0,1]");
  require(cfg.zero_division_epsilon > Scalar(0), errc::invalid_argument,
          "zero_division_epsilon must be positive");
}

/// Dampened Sinkhorn iteration for the gamma-democratic constraint
/// diag(a) K diag(a) 1 = (K 1)^gamma. Starting from a = 1, each step
/// computes sigma = diag(a) K diag(a) 1 / (K 1)^gamma and updates
/// a <- a / sigma^tau. gamma = 0 is fully democratic pooling (target 1),
/// gamma = 1 leaves a = 1 and reproduces sum pooling.
template <typename Scalar>
DemocraticWeights<Scalar> solve_gamma_democratic(
    const KernelMatrix<Scalar>& kernel, const SinkhornConfig<Scalar>& cfg) {
  validate(cfg);
  const Matrix<Scalar>& k = kernel.values;
  require(k.rows() == k.cols(), errc::dimension_mismatch,
          "kernel matrix must be square");
  require(k.minCoeff() >= Scalar(0), errc::non_positive_kernel,
          "kernel has negative entries; clamp first-order kernels first");

  // K 1_n evaluated as a matvec, the same kernel the iteration uses, so the
  // gamma = 1 target matches sigma's numerator bit-for-bit at alpha = 1.
  const Vector<Scalar> row_sums = k * Vector<Scalar>::Ones(k.rows());
  require(row_sums.minCoeff() > cfg.zero_division_epsilon, errc::zero_row_sum,
          "kernel has a (near-)zero row sum");

  // Fixed target, computed once. The endpoints bypass pow() so that gamma = 0
  // reduces bitwise to the democratic solve and gamma = 1 keeps alpha = 1
  // exactly (vectorized pow does not guarantee pow(x,1) == x).
  Vector<Scalar> target;
  if (cfg.gamma == Scalar(0))
    target = Vector<Scalar>::Ones(k.rows());
  else if (cfg.gamma == Scalar(1))
    target = row_sums;
  else
    target = row_sums.array().pow(cfg.gamma).matrix();

  Vector<Scalar> alpha = Vector<Scalar>::Ones(k.rows());
  for (int t = 0; t < cfg.iterations; ++t) {
    const Vector<Scalar> sigma =
        (alpha.array() * (k * alpha).array() / target.array()).matrix();
    alpha = (alpha.array() / sigma.array().pow(cfg.tau)).matrix();
  }

  const Vector<Scalar> constraint = alpha.array() * (k * alpha).array();
  const Scalar residual =
      ((constraint - target).array() / target.array()).abs().maxCoeff();
  return DemocraticWeights<Scalar>{std::move(alpha), residual, cfg.iterations};
}

/// Fully democratic weights: the gamma = 0 special case.
template <typename Scalar>
DemocraticWeights<Scalar> solve_democratic(const KernelMatrix<Scalar>& kernel,
                                           SinkhornConfig<Scalar> cfg) {
  cfg.gamma = Scalar(0);
  return solve_gamma_democratic(kernel, cfg);
}

}  // namespace dempool

#endif  // DEMPOOL_SINKHORN_HPP
