#ifndef DEMPOOL_SKETCH_HPP
#define DEMPOOL_SKETCH_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "dempool/aggregate.hpp"
#include "dempool/common.hpp"
#include "dempool/features.hpp"

namespace dempool {

/// Tensor Sketch parameters: two independent count-sketch hash pairs
/// (h_j, s_j) with h_j: [d] -> [k] and s_j: [d] -> {-1,+1}, fully
/// determined by (d, k, seed).
template <typename Scalar>
struct SketchConfig {
  Index k = 8192;
  std::uint64_t seed = 0;
  Eigen::VectorXi h1, h2;
  Vector<Scalar> s1, s2;

  Index input_dim() const { return h1.size(); }
};

template <typename Scalar>
SketchConfig<Scalar> make_sketch_config(Index d, Index k, std::uint64_t seed) {
  require(d >= 1, errc::invalid_argument, "sketch input dim must be >= 1");
  require(k >= 1, errc::invalid_argument, "sketch dim must be >= 1");
  SketchConfig<Scalar> cfg;
  cfg.k = k;
  cfg.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> bucket(0, static_cast<int>(k) - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  auto draw_pair = [&](Eigen::VectorXi& h, Vector<Scalar>& s) {
    h.resize(d);
    s.resize(d);
    for (Index i = 0; i < d; ++i) h[i] = bucket(rng);
    for (Index i = 0; i < d; ++i) s[i] = coin(rng) ? Scalar(1) : Scalar(-1);
  };
  draw_pair(cfg.h1, cfg.s1);
  draw_pair(cfg.h2, cfg.s2);
  return cfg;
}

namespace detail {

/// Count sketch: scatters x_i * s(i) into bucket h(i).
template <typename Scalar>
Vector<Scalar> count_sketch(const Vector<Scalar>& x, const Eigen::VectorXi& h,
                            const Vector<Scalar>& s, Index k) {
  Vector<Scalar> out = Vector<Scalar>::Zero(k);
  for (Index i = 0; i < x.size(); ++i) out[h[i]] += x[i] * s[i];
  return out;
}

}  // namespace detail

/// Tensor Sketch of one feature: theta(x) = idft(dft(CS1(x)) .* dft(CS2(x))),
/// i.e. the circular convolution of the two count sketches. Satisfies
/// E[theta(x)^T theta(y)] = (x^T y)^2. The imaginary residue of the inverse
/// transform must stay below 1e-6 * |theta| and is discarded.
template <typename Scalar>
Vector<Scalar> sketch_feature(const Vector<Scalar>& x,
                              const SketchConfig<Scalar>& cfg) {
  require(x.size() == cfg.input_dim(), errc::dimension_mismatch,
          "feature dim does not match sketch config");
  const Index k = cfg.k;
  const Vector<Scalar> cs1 = detail::count_sketch(x, cfg.h1, cfg.s1, k);
  const Vector<Scalar> cs2 = detail::count_sketch(x, cfg.h2, cfg.s2, k);

  using Complex = std::complex<Scalar>;
  std::vector<Complex> a(k), b(k), fa, fb;
  for (Index i = 0; i < k; ++i) {
    a[i] = Complex(cs1[i], 0);
    b[i] = Complex(cs2[i], 0);
  }
  Eigen::FFT<Scalar> fft;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (Index i = 0; i < k; ++i) fa[i] *= fb[i];
  std::vector<Complex> conv;
  fft.inv(conv, fa);

  Vector<Scalar> theta(k);
  Scalar imag_sq = 0;
  for (Index i = 0; i < k; ++i) {
    theta[i] = conv[i].real();
    imag_sq += conv[i].imag() * conv[i].imag();
  }
  require(std::sqrt(imag_sq) <= Scalar(1e-6) * theta.norm() ||
              theta.norm() == Scalar(0),
          errc::numeric_error, "fft imaginary residue exceeds tolerance");
  return theta;
}

/// Sketched second-order aggregation: sum_i alpha_i theta(x_i), a
/// k-dimensional stand-in for the d^2 explicit descriptor.
template <typename Scalar>
Descriptor<Scalar> aggregate_second_order_sketched(
    const FeatureSet<Scalar>& fs, const Vector<Scalar>& alpha,
    const SketchConfig<Scalar>& cfg) {
  require(alpha.size() == fs.count(), errc::dimension_mismatch,
          "weight vector length does not match feature count");
  require(fs.dim() == cfg.input_dim(), errc::dimension_mismatch,
          "feature dim does not match sketch config");
  Vector<Scalar> acc = Vector<Scalar>::Zero(cfg.k);
  for (Index i = 0; i < fs.count(); ++i)
    acc += alpha[i] * sketch_feature<Scalar>(fs.data.row(i).transpose(), cfg);
  return Descriptor<Scalar>{std::move(acc), Encoding::second_sketch, false};
}

template <typename Scalar>
Descriptor<Scalar> aggregate_second_order_sketched(
    const FeatureSet<Scalar>& fs, const DemocraticWeights<Scalar>& w,
    const SketchConfig<Scalar>& cfg) {
  return aggregate_second_order_sketched(fs, w.alpha, cfg);
}

}  // namespace dempool

#endif  // DEMPOOL_SKETCH_HPP
