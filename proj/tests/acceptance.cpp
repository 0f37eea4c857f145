// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Every tolerance is pinned in code; no criterion depends on
// later calibration. Run it via ctest or directly:
//
//   ./build/tests/acceptance

#include <dempool/dempool.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace dempool;

namespace {

struct Failure {
  std::string detail;
};

#define ACCEPT(cond, detail_expr)                                   \
  do {                                                              \
    if (!(cond)) {                                                  \
      std::ostringstream oss_;                                      \
      oss_ << detail_expr;                                          \
      throw Failure{oss_.str()};                                    \
    }                                                               \
  } while (0)

double now_s() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

FeatureSet<double> random_features(Index n, Index d, std::uint64_t seed) {
  return make_feature_set<double>(oracles::random_gaussian(n, d, seed));
}

SyntheticSpec bursty_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = 64;
  spec.d = 16;
  spec.burst_fraction = 0.5;
  spec.signal_fraction = 0.25;
  spec.noise_scale = 0.4;
  spec.seed = seed;
  return spec;
}

// --- 1: golden 2x2 square root and its span membership ---------------------

void criterion_golden_square_root() {
  Matrix<double> x(2, 2);
  x << 1, 0, 1, 1;
  const auto fs = make_feature_set<double>(x);
  const Matrix<double> a = second_order_matrix(fs);
  Matrix<double> a_expected(2, 2);
  a_expected << 2, 1, 1, 1;
  ACCEPT((a - a_expected).cwiseAbs().maxCoeff() == 0.0,
         "aggregate != [[2,1],[1,1]]");

  const Matrix<double> root = matrix_power(a, 0.5);
  Matrix<double> root_expected(2, 2);
  root_expected << 1.3416, 0.4472, 0.4472, 0.8944;
  const double err = (root - root_expected).cwiseAbs().maxCoeff();
  ACCEPT(err < 1e-3, "square root off by " << err);

  const auto span = in_span_of_outer_products(root, fs, 0.01);
  ACCEPT(!span.in_span, "A^{1/2} unexpectedly in the outer-product span");
  ACCEPT(span.residual > 0.01 * root.norm(),
         "span residual too small: " << span.residual);

  const auto self_span = in_span_of_outer_products(a, fs, 1e-8);
  ACCEPT(self_span.in_span, "A itself must lie in the span");
}

// --- 2: kernel squaring equals the explicit d^2 Gram matrix ----------------

void criterion_kernel_squaring() {
  for (int i = 0; i < 100; ++i) {
    const Index n = 2 + (i * 5) % 19;
    const Index d = 2 + (i * 3) % 7;
    const auto x = oracles::random_gaussian(n, d, 100 + i);
    const auto kernel = second_order_kernel(make_feature_set<double>(x));
    const auto oracle = oracles::explicit_outer_gram(x);
    const double scale = oracle.cwiseAbs().maxCoeff();
    const double err = (kernel.values - oracle).cwiseAbs().maxCoeff();
    ACCEPT(err <= 1e-10 * scale,
           "instance " << i << ": kernel-squaring error " << err);
    ACCEPT(kernel.values.minCoeff() >= 0.0,
           "instance " << i << ": negative kernel entry");
  }
}

// --- 3: gamma endpoints -----------------------------------------------------

void criterion_gamma_endpoints() {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index n = 5 + static_cast<Index>(seed * 7) % 46;  // up to 50
    const auto fs = random_features(n, 8, 200 + seed);
    const auto kernel = second_order_kernel(fs);

    SinkhornConfig<double> cfg;
    cfg.gamma = 1.0;
    const auto sum_weights = solve_gamma_democratic(kernel, cfg);
    ACCEPT((sum_weights.alpha.array() == 1.0).all(),
           "seed " << seed << ": gamma=1 weights are not exactly ones");

    cfg.gamma = 0.0;
    cfg.iterations = 50;
    const auto dem = solve_gamma_democratic(kernel, cfg);
    ACCEPT(dem.residual <= 1e-3,
           "seed " << seed << ": democratic residual " << dem.residual);

    const auto xi = aggregate_second_order(fs, dem.alpha);
    Vector<double> contrib(n);
    for (Index i = 0; i < n; ++i)
      contrib[i] = contribution(i, fs, dem.alpha, xi);
    const double spread =
        (contrib.maxCoeff() - contrib.minCoeff()) / contrib.mean();
    ACCEPT(spread <= 0.01,
           "seed " << seed << ": contribution spread " << spread);
  }
}

// --- 4 & 5: spectral identities and bounds over a random grid --------------

struct GridInstance {
  FeatureSet<double> fs;
  Vector<double> lambda;  // independent eigensolve of A, clamped
};

std::vector<GridInstance> spectral_grid() {
  std::vector<GridInstance> grid;
  for (int i = 0; i < 100; ++i) {
    const Index n = 2 + (i * 7) % 63;
    const Index d = 2 + (i * 11) % 63;
    GridInstance inst{random_features(n, d, 300 + i), {}};
    Matrix<double> a = Matrix<double>::Zero(d, d);
    for (Index r = 0; r < n; ++r)
      a += inst.fs.data.row(r).transpose() * inst.fs.data.row(r);
    Eigen::SelfAdjointEigenSolver<Matrix<double>> es(a);
    inst.lambda = es.eigenvalues().cwiseMax(0.0);
    grid.push_back(std::move(inst));
  }
  return grid;
}

const std::vector<double>& p_grid() {
  static const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5,
                                        0.6, 0.7, 0.8, 0.9, 1.0};
  return grid;
}

void criterion_power_norm_identities() {
  for (const auto& inst : spectral_grid()) {
    for (double p : p_grid()) {
      const auto report = contributions_vs_power(inst.fs, p);
      const double rho_identity =
          std::sqrt(inst.lambda.array().pow(2 * p).sum());
      ACCEPT(std::abs(report.rho - rho_identity) <= 1e-8 * rho_identity,
             "p=" << p << ": rho " << report.rho << " vs identity "
                  << rho_identity);
      const double sum_identity =
          inst.lambda.array().pow(1 + p).sum() / rho_identity;
      ACCEPT(std::abs(report.sum_c - sum_identity) <=
                 1e-8 * std::abs(sum_identity),
             "p=" << p << ": sum " << report.sum_c << " vs identity "
                  << sum_identity);
    }
  }
}

void criterion_contribution_bounds() {
  for (const auto& inst : spectral_grid()) {
    for (double p : p_grid()) {
      const auto report = contributions_vs_power(inst.fs, p);
      for (const auto& check : verify_bounds(report)) {
        ACCEPT(check.holds, "p=" << p << " bound " << check.name
                                 << " violated, slack " << check.slack);
      }
    }
  }
}

// --- 6: spectrum flattening -------------------------------------------------

void criterion_spectrum_flattening() {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto fs = random_features(4 + (seed * 5) % 40, 3 + (seed * 3) % 20,
                                    400 + seed);
    double previous = std::numeric_limits<double>::infinity();
    for (double p : p_grid()) {
      const double entropy =
          spectrum_report(fs, SpectrumMethod<double>::power(p)).entropy;
      ACCEPT(entropy <= previous + 1e-12,
             "seed " << seed << ": entropy rose from " << previous << " to "
                     << entropy << " at p=" << p);
      previous = entropy;
    }
  }

  int reduced = 0;
  const int trials = 50;
  for (int seed = 0; seed < trials; ++seed) {
    const auto fs = generate_synthetic<double>(bursty_spec(500 + seed));
    const double democratic =
        spectrum_report(fs, SpectrumMethod<double>::gamma_democratic(0.0))
            .spectrum[0];
    const double sum =
        spectrum_report(fs, SpectrumMethod<double>::sum()).spectrum[0];
    if (democratic < sum) ++reduced;
  }
  ACCEPT(reduced >= 45, "top-eigenvalue mass reduced in only " << reduced
                                                               << "/50 runs");
}

// --- 7: tensor sketch fidelity ----------------------------------------------

void criterion_sketch_fidelity() {
  const Index d = 16, k = 4096;
  const Vector<double> x = oracles::random_gaussian(d, 1, 600);
  const Vector<double> y = oracles::random_gaussian(d, 1, 601);
  const double truth = std::pow(x.dot(y), 2.0);

  const int trials = 200;
  Vector<double> estimates(trials);
  for (int s = 0; s < trials; ++s) {
    const auto cfg = make_sketch_config<double>(d, k, 7000 + s);
    estimates[s] = sketch_feature(x, cfg).dot(sketch_feature(y, cfg));
  }
  const double mean = estimates.mean();
  const double var =
      (estimates.array() - mean).square().sum() / double(trials - 1);
  const double se = std::sqrt(var / trials);
  ACCEPT(std::abs(mean - truth) <= 3.0 * se,
         "sketch mean " << mean << " vs truth " << truth << " (3se=" << 3 * se
                        << ")");

  const Index n = 10;
  const auto xa = oracles::random_gaussian(n, d, 610);
  const auto xb = oracles::random_gaussian(n, d, 611);
  const Vector<double> ones = Vector<double>::Ones(n);
  const double explicit_dot =
      oracles::explicit_second_order_aggregate(xa, ones)
          .dot(oracles::explicit_second_order_aggregate(xb, ones));
  double mean_sketched = 0;
  for (int s = 0; s < 20; ++s) {
    const auto cfg = make_sketch_config<double>(d, k, 8000 + s);
    mean_sketched +=
        aggregate_second_order_sketched(make_feature_set<double>(xa), ones, cfg)
            .values.dot(aggregate_second_order_sketched(
                            make_feature_set<double>(xb), ones, cfg)
                            .values);
  }
  mean_sketched /= 20;
  ACCEPT(std::abs(mean_sketched - explicit_dot) <= 0.10 * std::abs(explicit_dot),
         "sketched aggregate dot " << mean_sketched << " vs explicit "
                                   << explicit_dot);
}

// --- 8: square-root oracles -------------------------------------------------

void criterion_newton_sqrt_oracle() {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix<double> a = oracles::random_psd(64, 700 + seed, 0.5, 2.0);
    const Matrix<double> ns = newton_schulz_sqrt(a, 20);
    const double vs_eig = (ns - matrix_power(a, 0.5)).norm();
    ACCEPT(vs_eig <= 1e-5,
           "seed " << seed << ": Newton vs eig distance " << vs_eig);
    const double defect = (ns * ns - a).norm() / a.norm();
    ACCEPT(defect <= 1e-4, "seed " << seed << ": ZZ-A defect " << defect);
  }
}

// --- 9: complexity scaling --------------------------------------------------

void criterion_complexity_scaling() {
  Eigen::setNbThreads(1);
  const auto sinkhorn = sinkhorn_scaling({256, 512, 1024, 2048}, 16, 10, 3);
  ACCEPT(std::abs(sinkhorn.exponent - 2.0) <= 0.4,
         "Sinkhorn per-iteration exponent " << sinkhorn.exponent);
  const auto newton = newton_scaling({64, 128, 256, 512}, 128, 10, 3);
  ACCEPT(std::abs(newton.exponent - 3.0) <= 0.5,
         "Newton per-iteration exponent " << newton.exponent);

  const auto head_to_head = run_pooling_bench(784, 512, 10, 20, 3);
  ACCEPT(head_to_head.sinkhorn_iters_ms < head_to_head.newton_sqrt_ms,
         "Sinkhorn iterations (" << head_to_head.sinkhorn_iters_ms
                                 << " ms) not faster than Newton ("
                                 << head_to_head.newton_sqrt_ms << " ms)");
  std::printf(
      "       (n=784, d=512: sinkhorn iters %.2f ms, newton sqrt %.2f ms, "
      "ratio %.1fx; exponents n^%.2f / d^%.2f)\n",
      head_to_head.sinkhorn_iters_ms, head_to_head.newton_sqrt_ms,
      head_to_head.newton_over_sinkhorn_iters, sinkhorn.exponent,
      newton.exponent);
}

// --- 10: end-to-end synthetic classification --------------------------------

Descriptor<double> classification_pipeline(const FeatureSet<double>& fs,
                                           double gamma) {
  SinkhornConfig<double> cfg;
  cfg.gamma = gamma;
  const auto weights = solve_gamma_democratic(second_order_kernel(fs), cfg);
  return postprocess(aggregate_second_order(fs, weights.alpha));
}

void criterion_synthetic_classification() {
  const int classes = 4, train_per_class = 100, test_per_class = 50;
  const Index n = 64, d = 32;
  double mean_sum = 0, mean_democratic = 0;
  for (std::uint64_t seed0 = 1; seed0 <= 5; ++seed0) {
    auto build = [&](int count, std::uint64_t salt, Matrix<double>& out_sum,
                     Matrix<double>& out_dem, std::vector<int>& labels) {
      out_sum.resize(Index(classes) * count, d * d);
      out_dem.resize(Index(classes) * count, d * d);
      labels.clear();
      Index row = 0;
      for (int c = 0; c < classes; ++c)
        for (int i = 0; i < count; ++i) {
          SyntheticSpec spec;
          spec.n = n;
          spec.d = d;
          spec.burst_fraction = 0.5;
          spec.signal_fraction = 0.25;
          spec.noise_scale = 0.4;
          spec.class_id = c;
          spec.seed = seed0 * 1000003ULL + salt * 7919ULL +
                      std::uint64_t(c) * 131ULL + std::uint64_t(i);
          const auto fs = generate_synthetic<double>(spec);
          out_sum.row(row) = classification_pipeline(fs, 1.0).values.transpose();
          out_dem.row(row) = classification_pipeline(fs, 0.5).values.transpose();
          labels.push_back(c);
          ++row;
        }
    };

    Matrix<double> train_sum, train_dem, test_sum, test_dem;
    std::vector<int> train_labels, test_labels;
    build(train_per_class, 0, train_sum, train_dem, train_labels);
    build(test_per_class, 1, test_sum, test_dem, test_labels);

    const auto model_sum =
        train_ovr_linear(make_labeled_set(train_sum, train_labels), 1.0);
    const auto model_dem =
        train_ovr_linear(make_labeled_set(train_dem, train_labels), 1.0);
    mean_sum += accuracy(test_labels, predict(model_sum, test_sum));
    mean_democratic += accuracy(test_labels, predict(model_dem, test_dem));
  }
  mean_sum /= 5;
  mean_democratic /= 5;
  std::printf("       (mean accuracy: gamma=0.5 %.3f, sum pooling %.3f)\n",
              mean_democratic, mean_sum);
  ACCEPT(mean_democratic >= mean_sum,
         "democratic " << mean_democratic << " < sum pooling " << mean_sum);
}

// --- 11: CLI determinism ----------------------------------------------------

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_cli_determinism() {
  namespace fs = std::filesystem;
  const std::string cli = DEMPOOL_CLI_PATH;
  const fs::path dir =
      fs::temp_directory_path() / ("dempool_accept_" + std::to_string(getpid()));
  fs::create_directories(dir);
  auto file = [&](const std::string& name) { return (dir / name).string(); };
  auto run = [&](const std::string& args) {
    const int status =
        std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    ACCEPT(WEXITSTATUS(status) == 0, "command failed: " << args);
  };

  run("--seed 99 gen --n 48 --d 24 --burst 0.5 --signal 0.25 --noise 0.4 "
      "--out " + file("f.dpf"));
  const std::vector<std::string> variants = {
      "aggregate --input " + file("f.dpf") + " --gamma 0.5 --out ",
      "aggregate --input " + file("f.dpf") +
          " --encoder sketch --sketch-dim 512 --sketch-seed 5 --gamma 0 "
          "--out ",
      "aggregate --input " + file("f.dpf") + " --power 0.5 --out ",
      "aggregate --input " + file("f.dpf") + " --order 1 --gamma 0.5 --out ",
  };
  int idx = 0;
  for (const auto& variant : variants) {
    const std::string out_a = file("a" + std::to_string(idx) + ".dpf");
    const std::string out_b = file("b" + std::to_string(idx) + ".dpf");
    run(variant + out_a);
    run(variant + out_b);
    const std::string bytes = slurp(out_a);
    ACCEPT(!bytes.empty(), "empty descriptor from: " << variant);
    ACCEPT(bytes == slurp(out_b), "non-deterministic output from: " << variant);
    ++idx;
  }
  fs::remove_all(dir);
}

// ----------------------------------------------------------------------------

struct Criterion {
  const char* name;
  double budget_s;  // 0 = no stated budget
  std::function<void()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"01 golden-square-root-and-span", 1.0, criterion_golden_square_root},
      {"02 kernel-squaring-equivalence", 10.0, criterion_kernel_squaring},
      {"03 gamma-endpoints", 30.0, criterion_gamma_endpoints},
      {"04 power-norm-identities", 60.0, criterion_power_norm_identities},
      {"05 contribution-bounds", 60.0, criterion_contribution_bounds},
      {"06 spectrum-flattening", 0.0, criterion_spectrum_flattening},
      {"07 sketch-fidelity", 60.0, criterion_sketch_fidelity},
      {"08 newton-sqrt-oracle", 0.0, criterion_newton_sqrt_oracle},
      {"09 complexity-scaling", 300.0, criterion_complexity_scaling},
      {"10 synthetic-classification", 300.0, criterion_synthetic_classification},
      {"11 cli-determinism", 0.0, criterion_cli_determinism},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const double start = now_s();
    std::string detail;
    bool ok = true;
    try {
      criterion.body();
    } catch (const Failure& f) {
      ok = false;
      detail = f.detail;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed = now_s() - start;
    if (ok && criterion.budget_s > 0 && elapsed > criterion.budget_s) {
      ok = false;
      std::ostringstream oss;
      oss << "runtime " << elapsed << " s exceeds budget " << criterion.budget_s
          << " s";
      detail = oss.str();
    }
    if (ok) {
      std::printf("[PASS] %s (%.2f s)\n", criterion.name, elapsed);
    } else {
      std::printf("[FAIL] %s (%.2f s): %s\n", criterion.name, elapsed,
                  detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu/%zu criteria passed\n",
              criteria.size() - failures, criteria.size());
  return failures;
}
