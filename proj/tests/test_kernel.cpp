#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <dempool/kernel.hpp>
#include <dempool/sinkhorn.hpp>

#include "oracles.hpp"

using namespace dempool;

TEST_CASE("raw kernel of orthonormal rows is the identity") {
  Matrix<double> x(2, 2);
  x << 1, 0, 0, 1;
  const auto k = raw_kernel(make_feature_set<double>(x));
  CHECK(k.order == KernelOrder::first);
  CHECK(k.values.isApprox(Matrix<double>::Identity(2, 2)));
}

TEST_CASE("raw kernel matches hand-computed dot products") {
  Matrix<double> x(2, 2);
  x << 1, 0, 1, 1;
  const auto k = raw_kernel(make_feature_set<double>(x));
  Matrix<double> expected(2, 2);
  expected << 1, 1, 1, 2;
  CHECK((k.values - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("raw kernel matches the brute-force oracle") {
  const auto x = oracles::random_gaussian(5, 3, 21);
  const auto k = raw_kernel(make_feature_set<double>(x));
  CHECK((k.values - oracles::brute_force_gram(x)).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("second-order kernel squares the hand example") {
  Matrix<double> x(2, 2);
  x << 1, 0, 1, 1;
  const auto k = second_order_kernel(make_feature_set<double>(x));
  Matrix<double> expected(2, 2);
  expected << 1, 1, 1, 4;
  CHECK(k.order == KernelOrder::second);
  CHECK((k.values - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("second-order kernel equals the explicit outer-product Gram") {
  const auto x = oracles::random_gaussian(6, 4, 33);
  const auto k = second_order_kernel(make_feature_set<double>(x));
  const auto oracle = oracles::explicit_outer_gram(x);
  const double scale = oracle.cwiseAbs().maxCoeff();
  CHECK((k.values - oracle).cwiseAbs().maxCoeff() <= 1e-10 * scale);
}

TEST_CASE("second-order kernel is entrywise non-negative") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = oracles::random_gaussian(8, 5, seed);
    const auto k = second_order_kernel(make_feature_set<double>(x));
    CHECK(k.values.minCoeff() >= 0.0);
  }
}

TEST_CASE("second-order kernel is exactly the Hadamard square of raw") {
  const auto x = oracles::random_gaussian(7, 4, 5);
  const auto fs = make_feature_set<double>(x);
  const auto raw = raw_kernel(fs);
  const auto second = second_order_kernel(fs);
  const Matrix<double> squared = raw.values.array().square();
  CHECK((second.values.array() == squared.array()).all());
}

TEST_CASE("kernels are exactly symmetric with strictly positive diagonals") {
  const auto x = oracles::random_gaussian(20, 9, 100);
  const auto fs = make_feature_set<double>(x);
  const auto raw = raw_kernel(fs);
  const auto second = second_order_kernel(fs);
  CHECK(max_abs_asymmetry(raw.values) == 0.0);
  CHECK(max_abs_asymmetry(second.values) == 0.0);
  CHECK(raw.values.diagonal().minCoeff() > 0.0);
  CHECK(second.values.diagonal().minCoeff() > 0.0);
}

TEST_CASE("the pipeline instantiates for float scalars") {
  Matrix<float> x(3, 2);
  x << 1, 0, 1, 1, 0, 2;
  const auto fs = make_feature_set<float>(x);
  const auto k = second_order_kernel(fs);
  CHECK(k.values(1, 1) == 4.0f);
  SinkhornConfig<float> cfg;
  cfg.iterations = 50;
  cfg.zero_division_epsilon = 1e-10f;
  const auto w = solve_democratic(k, cfg);
  CHECK(w.residual <= 1e-3f);
}

TEST_CASE("second-order kernel is positive definite for generic features") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = oracles::random_gaussian(8, 6, seed + 50);
    const auto k = second_order_kernel(make_feature_set<double>(x));
    Eigen::SelfAdjointEigenSolver<Matrix<double>> es(k.values);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("clamp_negatives zeroes negative entries and is idempotent") {
  Matrix<double> v(2, 2);
  v << 1, -2, -2, 3;
  KernelMatrix<double> k{v, KernelOrder::first};
  const auto clamped = clamp_negatives(k);
  Matrix<double> expected(2, 2);
  expected << 1, 0, 0, 3;
  CHECK((clamped.values - expected).cwiseAbs().maxCoeff() == 0.0);
  const auto twice = clamp_negatives(clamped);
  CHECK((twice.values.array() == clamped.values.array()).all());
}

TEST_CASE("clamping an all-negative off-diagonal kernel leaves the diagonal") {
  Matrix<double> v(3, 3);
  v << 2, -1, -1, -1, 3, -1, -1, -1, 4;
  const auto clamped = clamp_negatives(KernelMatrix<double>{v, KernelOrder::first});
  CHECK(clamped.values.isApprox(Eigen::Vector3d(2, 3, 4).asDiagonal().toDenseMatrix()));
}

TEST_CASE("clamping a second-order kernel changes nothing") {
  const auto x = oracles::random_gaussian(6, 3, 77);
  const auto k = second_order_kernel(make_feature_set<double>(x));
  const auto clamped = clamp_negatives(k);
  CHECK((clamped.values.array() == k.values.array()).all());
}
