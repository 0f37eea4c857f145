#ifndef DEMPOOL_ANALYSIS_HPP
#define DEMPOOL_ANALYSIS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "dempool/aggregate.hpp"
#include "dempool/common.hpp"
#include "dempool/features.hpp"
#include "dempool/kernel.hpp"
#include "dempool/sinkhorn.hpp"
#include "dempool/spectral.hpp"

namespace dempool {

/// Contributions C(x_i) = x_i^T A^p x_i / rho(A^p) of each feature to the
/// l2-normalized matrix power of the sum-pooled aggregate, together with
/// the spectral quantities that bound them.
template <typename Scalar>
struct ContributionReport {
  Scalar p;
  Vector<Scalar> eigenvalues;  // of A, descending
  Scalar rho;                  // |vec(A^p)|_2, measured from the matrix
  Vector<Scalar> contributions;
  Scalar sum_c;
  Scalar mean;
  Scalar max;
  Scalar min;
  Scalar variance;  // population variance of the contributions
  Scalar r_max;     // max squared feature radius
  Scalar r_min;
  // Bounds, all computed from the spectrum and radii:
  Scalar sum_identity;      // (sum_i lambda_i^{1+p}) / rho
  Scalar max_upper;         // r_max lambda_1^p / rho
  Scalar min_lower;         // r_min lambda_d^p / rho
  Scalar var_popoviciu;     // (M - m)^2 / 4
  Scalar var_bhatia_davis;  // (M - mu)(mu - m)
  Scalar var_spectral;      // r_max^2 lambda_1^{2p} / (4 rho^2)
};

template <typename Scalar>
ContributionReport<Scalar> contributions_vs_power(const FeatureSet<Scalar>& fs,
                                                  Scalar p) {
  require(p > Scalar(0) && p <= Scalar(1), errc::invalid_argument,
          "power exponent must lie in (0,1]");
  const Matrix<Scalar> a = second_order_matrix(fs);
  require(!a.isZero(Scalar(0)), errc::zero_matrix, "aggregate matrix is zero");

  const SpectralDecomposition<Scalar> eig = eig_sym(a);
  const Matrix<Scalar> ap = p == Scalar(1) ? a : matrix_power(eig, p);

  ContributionReport<Scalar> r;
  r.p = p;
  r.eigenvalues = eig.eigenvalues;
  r.rho = ap.norm();  // Frobenius norm == |vec(A^p)|_2
  require(r.rho > Scalar(0), errc::zero_matrix, "A^p has zero norm");

  // C(x_i) via the quadratic-form identity, O(n d^2) with no d^2 vectors.
  r.contributions =
      ((fs.data * ap).cwiseProduct(fs.data)).rowwise().sum() / r.rho;

  const Index n = fs.count();
  r.sum_c = r.contributions.sum();
  r.mean = r.sum_c / Scalar(n);
  r.max = r.contributions.maxCoeff();
  r.min = r.contributions.minCoeff();
  r.variance =
      (r.contributions.array() - r.mean).square().sum() / Scalar(n);

  const Vector<Scalar> radii = fs.data.rowwise().squaredNorm();
  r.r_max = radii.maxCoeff();
  r.r_min = radii.minCoeff();

  const Scalar lambda_top = r.eigenvalues[0];
  const Scalar lambda_bot = r.eigenvalues[r.eigenvalues.size() - 1];
  r.sum_identity = r.eigenvalues.array().pow(Scalar(1) + p).sum() / r.rho;
  r.max_upper = r.r_max * std::pow(lambda_top, p) / r.rho;
  r.min_lower = r.r_min * std::pow(lambda_bot, p) / r.rho;
  r.var_popoviciu = (r.max - r.min) * (r.max - r.min) / Scalar(4);
  r.var_bhatia_davis = (r.max - r.mean) * (r.mean - r.min);
  r.var_spectral = r.r_max * r.r_max * std::pow(lambda_top, 2 * p) /
                   (Scalar(4) * r.rho * r.rho);
  return r;
}

template <typename Scalar>
struct BoundCheck {
  std::string name;
  bool holds;
  Scalar slack;  // >= -1e-9 means the inequality holds
};

/// Evaluates every proved inequality of the report, plus the ordering of the
/// variance-bound chain itself. Slack is oriented so that >= -1e-9 means the
/// inequality holds.
template <typename Scalar>
std::vector<BoundCheck<Scalar>> verify_bounds(
    const ContributionReport<Scalar>& r) {
  constexpr Scalar kTol = Scalar(-1e-9);
  std::vector<BoundCheck<Scalar>> checks;
  auto push = [&](const std::string& name, Scalar slack) {
    checks.push_back(BoundCheck<Scalar>{name, slack >= kTol, slack});
  };
  push("max_le_upper", r.max_upper - r.max);
  push("min_ge_lower", r.min - r.min_lower);
  push("var_le_bhatia_davis", r.var_bhatia_davis - r.variance);
  push("var_le_popoviciu", r.var_popoviciu - r.variance);
  push("var_le_spectral", r.var_spectral - r.variance);
  push("chain_bhatia_davis_le_popoviciu", r.var_popoviciu - r.var_bhatia_davis);
  push("chain_popoviciu_le_spectral", r.var_spectral - r.var_popoviciu);
  return checks;
}

/// How the aggregate whose spectrum is reported gets built.
template <typename Scalar>
struct SpectrumMethod {
  enum class Kind { sum, power, gamma_democratic };
  Kind kind;
  Scalar param;  // p for power, gamma for gamma_democratic

  static SpectrumMethod sum() { return {Kind::sum, Scalar(1)}; }
  static SpectrumMethod power(Scalar p) { return {Kind::power, p}; }
  static SpectrumMethod gamma_democratic(Scalar gamma) {
    return {Kind::gamma_democratic, gamma};
  }
};

template <typename Scalar>
struct SpectrumReport {
  Vector<Scalar> spectrum;  // eigenvalues normalized to unit l1 sum, descending
  Scalar entropy;           // Shannon entropy (natural log); log(d) is maximal
  Scalar variance;          // population variance of the normalized spectrum
};

template <typename Derived>
SpectrumReport<typename Derived::Scalar> spectrum_report_of_matrix(
    const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const SpectralDecomposition<Scalar> eig = eig_sym(m);
  const Scalar total = eig.eigenvalues.sum();
  require(total > Scalar(0), errc::zero_matrix, "aggregate matrix is zero");
  SpectrumReport<Scalar> r;
  r.spectrum = eig.eigenvalues / total;
  r.entropy = Scalar(0);
  for (Index i = 0; i < r.spectrum.size(); ++i)
    if (r.spectrum[i] > Scalar(0))
      r.entropy -= r.spectrum[i] * std::log(r.spectrum[i]);
  const Scalar mean = Scalar(1) / Scalar(r.spectrum.size());
  r.variance = (r.spectrum.array() - mean).square().sum() /
               Scalar(r.spectrum.size());
  return r;
}

/// Normalized spectrum of the chosen aggregate: A for sum pooling, A^p for
/// matrix power, A_alpha for gamma-democratic reweighting (weights solved on
/// the second-order kernel).
template <typename Scalar>
SpectrumReport<Scalar> spectrum_report(
    const FeatureSet<Scalar>& fs, const SpectrumMethod<Scalar>& method,
    SinkhornConfig<Scalar> sinkhorn_cfg = SinkhornConfig<Scalar>{}) {
  using Kind = typename SpectrumMethod<Scalar>::Kind;
  switch (method.kind) {
    case Kind::sum:
      return spectrum_report_of_matrix(second_order_matrix(fs));
    case Kind::power:
      return spectrum_report_of_matrix(
          matrix_power(second_order_matrix(fs), method.param));
    case Kind::gamma_democratic: {
      sinkhorn_cfg.gamma = method.param;
      const DemocraticWeights<Scalar> w =
          solve_gamma_democratic(second_order_kernel(fs), sinkhorn_cfg);
      return spectrum_report_of_matrix(second_order_matrix(fs, w.alpha));
    }
  }
  fail(errc::invalid_argument, "unknown spectrum method");
}

}  // namespace dempool

#endif  // DEMPOOL_ANALYSIS_HPP
