#ifndef DEMPOOL_BENCH_HPP
#define DEMPOOL_BENCH_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "dempool/aggregate.hpp"
#include "dempool/common.hpp"
#include "dempool/features.hpp"
#include "dempool/kernel.hpp"
#include "dempool/sinkhorn.hpp"
#include "dempool/spectral.hpp"

namespace dempool {

/// Wall-clock comparison of the two normalization routes at one problem
/// size: T Sinkhorn iterations on the n x n kernel versus a Newton-Schulz
/// square root of the d x d covariance. File IO is never inside the timed
/// regions.
struct BenchResult {
  Index n = 0;
  Index d = 0;
  int sinkhorn_iterations = 0;
  int newton_iterations = 0;
  int repeats = 0;
  double kernel_build_ms = 0;        // n x n second-order kernel
  double sinkhorn_iters_ms = 0;      // the T-iteration solve only
  double covariance_build_ms = 0;    // d x d sum-pooled aggregate
  double newton_sqrt_ms = 0;         // the Newton-Schulz iterations
  double sinkhorn_phase_ms = 0;      // kernel + iterations
  double newton_phase_ms = 0;        // covariance + square root
  double newton_over_sinkhorn_iters = 0;  // ratio of the iteration phases
};

namespace detail {

inline double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_ms(F&& body) {
  const double start = now_ms();
  body();
  return now_ms() - start;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

inline Matrix<double> random_features(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix<double> x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = gauss(rng);
  return x;
}

}  // namespace detail

/// Median-of-repeats timing with one discarded warm-up run per phase.
inline BenchResult run_pooling_bench(Index n, Index d, int sinkhorn_iterations,
                                     int newton_iterations, int repeats,
                                     std::uint64_t seed = 42) {
  require(n >= 2 && d >= 2, errc::invalid_argument, "bench needs n, d >= 2");
  require(repeats >= 1, errc::invalid_argument, "bench needs repeats >= 1");

  const FeatureSet<double> fs =
      make_feature_set<double>(detail::random_features(n, d, seed));
  SinkhornConfig<double> cfg;
  cfg.iterations = sinkhorn_iterations;
  cfg.gamma = 0.0;

  BenchResult r;
  r.n = n;
  r.d = d;
  r.sinkhorn_iterations = sinkhorn_iterations;
  r.newton_iterations = newton_iterations;
  r.repeats = repeats;

  std::vector<double> kernel_t, solve_t, cov_t, newton_t;
  KernelMatrix<double> kernel = second_order_kernel(fs);
  Matrix<double> cov = second_order_matrix(fs);
  for (int rep = -1; rep < repeats; ++rep) {  // rep -1 is the warm-up
    const double tk = detail::time_ms([&] { kernel = second_order_kernel(fs); });
    DemocraticWeights<double> w{};
    const double ts =
        detail::time_ms([&] { w = solve_gamma_democratic(kernel, cfg); });
    const double tc = detail::time_ms([&] { cov = second_order_matrix(fs); });
    Matrix<double> root;
    const double tn = detail::time_ms(
        [&] { root = newton_schulz_sqrt(cov, newton_iterations); });
    if (rep < 0) continue;
    kernel_t.push_back(tk);
    solve_t.push_back(ts);
    cov_t.push_back(tc);
    newton_t.push_back(tn);
  }

  r.kernel_build_ms = detail::median(kernel_t);
  r.sinkhorn_iters_ms = detail::median(solve_t);
  r.covariance_build_ms = detail::median(cov_t);
  r.newton_sqrt_ms = detail::median(newton_t);
  r.sinkhorn_phase_ms = r.kernel_build_ms + r.sinkhorn_iters_ms;
  r.newton_phase_ms = r.covariance_build_ms + r.newton_sqrt_ms;
  r.newton_over_sinkhorn_iters =
      r.sinkhorn_iters_ms > 0 ? r.newton_sqrt_ms / r.sinkhorn_iters_ms : 0;
  return r;
}

struct ScalingPoint {
  Index size = 0;
  double per_iteration_ms = 0;
};

struct ScalingFit {
  std::vector<ScalingPoint> points;
  double exponent = 0;  // slope of log(time) vs log(size)
};

namespace detail {

inline double fit_exponent(const std::vector<ScalingPoint>& pts) {
  const auto n = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    const double x = std::log(static_cast<double>(p.size));
    const double y = std::log(p.per_iteration_ms);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Per-iteration Sinkhorn time across n (matrix-vector products on the
/// n x n kernel; expected slope ~2).
inline ScalingFit sinkhorn_scaling(const std::vector<Index>& n_values, Index d,
                                   int iterations, int repeats,
                                   std::uint64_t seed = 42) {
  ScalingFit fit;
  SinkhornConfig<double> cfg;
  cfg.iterations = iterations;
  for (Index n : n_values) {
    const FeatureSet<double> fs =
        make_feature_set<double>(detail::random_features(n, d, seed));
    const KernelMatrix<double> kernel = second_order_kernel(fs);
    std::vector<double> times;
    for (int rep = -1; rep < repeats; ++rep) {
      const double t =
          detail::time_ms([&] { (void)solve_gamma_democratic(kernel, cfg); });
      if (rep >= 0) times.push_back(t);
    }
    fit.points.push_back({n, detail::median(times) / iterations});
  }
  fit.exponent = detail::fit_exponent(fit.points);
  return fit;
}

/// Per-iteration Newton-Schulz time across d (matrix-matrix products on the
/// d x d covariance; expected slope ~3).
inline ScalingFit newton_scaling(const std::vector<Index>& d_values, Index n,
                                 int iterations, int repeats,
                                 std::uint64_t seed = 42) {
  ScalingFit fit;
  for (Index d : d_values) {
    const FeatureSet<double> fs =
        make_feature_set<double>(detail::random_features(n, d, seed));
    const Matrix<double> cov = second_order_matrix(fs);
    std::vector<double> times;
    for (int rep = -1; rep < repeats; ++rep) {
      const double t =
          detail::time_ms([&] { (void)newton_schulz_sqrt(cov, iterations); });
      if (rep >= 0) times.push_back(t);
    }
    fit.points.push_back({d, detail::median(times) / iterations});
  }
  fit.exponent = detail::fit_exponent(fit.points);
  return fit;
}

}  // namespace dempool

#endif  // DEMPOOL_BENCH_HPP
