// dempool: democratic second-order feature pooling pipeline.
//
// Subcommands: gen, aggregate, analyze, classify, bench. All reports are
// JSON on stdout (or --out); data files are raw-f32 or csv. Library errors
// map one-to-one onto nonzero exit codes.

#include <CLI11.hpp>
#include <json.hpp>

#include <dempool/dempool.hpp>

#include <charconv>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using json = nlohmann::ordered_json;
using namespace dempool;

namespace {

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch())
      .count();
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string format = "raw-f32";  // csv | raw-f32 | json
};

FileFormat parse_file_format(const std::string& name) {
  if (name == "csv") return FileFormat::csv;
  if (name == "raw-f32") return FileFormat::raw_f32;
  fail(errc::invalid_argument,
       "format '" + name + "' is not valid for data files (csv, raw-f32)");
}

void emit_report(const json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    require(out.good(), errc::io_error,
            "cannot open '" + out_path + "' for writing");
    out << report.dump(2) << "\n";
  }
}

void write_descriptor(const std::string& path, const std::string& format,
                      const Descriptor<double>& desc) {
  if (format == "json") {
    json j;
    j["length"] = desc.values.size();
    j["normalized"] = desc.normalized;
    j["values"] = std::vector<double>(desc.values.data(),
                                      desc.values.data() + desc.values.size());
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), errc::io_error,
            "cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    require(out.good(), errc::io_error, "write failed for '" + path + "'");
    return;
  }
  Matrix<double> row(1, desc.values.size());
  row.row(0) = desc.values.transpose();
  save_matrix(path, row, parse_file_format(format));
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open '" + path + "'");
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    int value = 0;
    const auto [next, ec] =
        std::from_chars(line.data(), line.data() + line.size(), value);
    require(ec == std::errc() && next == line.data() + line.size(),
            errc::parse_error,
            "labels: cannot parse integer at line " + std::to_string(lineno) +
                " in '" + path + "'");
    labels.push_back(value);
  }
  require(!labels.empty(), errc::parse_error, "labels: no rows in '" + path + "'");
  return labels;
}

json to_json(const SpectrumReport<double>& report) {
  return json{{"spectrum", std::vector<double>(report.spectrum.data(),
                                               report.spectrum.data() +
                                                   report.spectrum.size())},
              {"entropy", report.entropy},
              {"variance", report.variance}};
}

// ---------------------------------------------------------------- gen ----

struct GenArgs {
  SyntheticSpec spec;
  std::string out;
};

int cmd_gen(const GlobalOptions& global, GenArgs args) {
  args.spec.seed = global.seed;
  const auto fs = generate_synthetic<double>(args.spec);
  save_features(args.out, fs, parse_file_format(global.format));
  json report;
  report["command"] = "gen";
  report["n"] = fs.count();
  report["d"] = fs.dim();
  report["class_id"] = args.spec.class_id;
  report["seed"] = args.spec.seed;
  report["out"] = args.out;
  report["format"] = global.format;
  emit_report(report, "");
  return 0;
}

// ---------------------------------------------------------- aggregate ----

struct AggregateArgs {
  std::string input;
  std::string input_format = "raw-f32";
  std::string out;
  int order = 2;
  std::string encoder = "explicit";
  std::optional<double> gamma;
  std::optional<double> power;
  double tau = 0.5;
  int iters = 10;
  Index sketch_dim = 8192;
  std::uint64_t sketch_seed = 0;
  std::string sqrt_method = "eig";
  int newton_iters = 20;
  bool drop_zero_rows = false;
  std::string dump_kernel;
};

int cmd_aggregate(const GlobalOptions& global, const AggregateArgs& args) {
  require(!(args.gamma && args.power), errc::invalid_argument,
          "--gamma and --power are mutually exclusive");
  require(args.order == 1 || args.order == 2, errc::invalid_argument,
          "--order must be 1 or 2");
  const bool sketched = args.encoder == "sketch";
  require(sketched || args.encoder == "explicit", errc::invalid_argument,
          "--encoder must be explicit or sketch");
  if (args.power) {
    require(args.order == 2, errc::invalid_argument,
            "--power applies to second-order aggregation only");
    require(!sketched, errc::invalid_argument,
            "matrix powers do not lie in the sketch span; --power needs "
            "--encoder explicit");
  }
  if (sketched)
    require(args.order == 2, errc::invalid_argument,
            "--encoder sketch applies to second-order aggregation only");

  const double t_start = now_ms();
  const auto fs = load_features<double>(
      args.input, parse_file_format(args.input_format),
      args.drop_zero_rows ? ZeroRowPolicy::drop : ZeroRowPolicy::reject);
  const double t_loaded = now_ms();

  json report;
  report["command"] = "aggregate";
  report["input"] = args.input;
  report["n"] = fs.count();
  report["d"] = fs.dim();
  report["order"] = args.order;
  report["encoder"] = args.encoder;

  double t_kernel = 0, t_solve = 0;
  Vector<double> alpha = uniform_weights<double>(fs.count());
  std::optional<KernelMatrix<double>> kernel;

  auto build_kernel = [&] {
    if (kernel) return;
    const double t0 = now_ms();
    kernel = args.order == 2 ? second_order_kernel(fs)
                             : clamp_negatives(raw_kernel(fs));
    t_kernel = now_ms() - t0;
  };

  if (args.gamma) {
    build_kernel();
    SinkhornConfig<double> cfg;
    cfg.gamma = *args.gamma;
    cfg.tau = args.tau;
    cfg.iterations = args.iters;
    const double t0 = now_ms();
    const auto weights = solve_gamma_democratic(*kernel, cfg);
    t_solve = now_ms() - t0;
    alpha = weights.alpha;
    report["mode"] = "gamma-democratic";
    report["gamma"] = *args.gamma;
    report["tau"] = args.tau;
    report["iterations"] = weights.iterations_run;
    report["residual"] = weights.residual;
  } else if (args.power) {
    report["mode"] = "matrix-power";
    report["power"] = *args.power;
    report["sqrt_method"] = args.sqrt_method;
  } else {
    report["mode"] = "sum";
  }

  if (!args.dump_kernel.empty()) {
    build_kernel();
    save_matrix(args.dump_kernel, kernel->values, FileFormat::csv);
    report["kernel_dump"] = args.dump_kernel;
  }

  const double t_agg0 = now_ms();
  Descriptor<double> desc{Vector<double>{}, Encoding::first, false};
  if (args.power) {
    Matrix<double> normalized;
    if (args.sqrt_method == "newton") {
      require(*args.power == 0.5, errc::invalid_argument,
              "--sqrt-method newton computes the square root; use --power 0.5");
      normalized = newton_schulz_sqrt(second_order_matrix(fs),
                                      args.newton_iters);
      report["newton_iters"] = args.newton_iters;
    } else {
      require(args.sqrt_method == "eig", errc::invalid_argument,
              "--sqrt-method must be eig or newton");
      normalized = matrix_power(second_order_matrix(fs), *args.power);
    }
    desc = Descriptor<double>{vec_row_major(normalized),
                              Encoding::second_explicit, false};
  } else if (sketched) {
    const auto cfg =
        make_sketch_config<double>(fs.dim(), args.sketch_dim, args.sketch_seed);
    desc = aggregate_second_order_sketched(fs, alpha, cfg);
    report["sketch_dim"] = args.sketch_dim;
    report["sketch_seed"] = args.sketch_seed;
  } else if (args.order == 2) {
    desc = aggregate_second_order(fs, alpha);
  } else {
    desc = aggregate_first_order(fs, alpha);
  }
  const double t_agg = now_ms() - t_agg0;

  const double t_post0 = now_ms();
  desc = postprocess(std::move(desc));
  const double t_post = now_ms() - t_post0;

  write_descriptor(args.out, global.format, desc);

  report["descriptor_length"] = desc.values.size();
  report["out"] = args.out;
  report["out_format"] = global.format;
  report["timings_ms"] =
      json{{"load", t_loaded - t_start},
           {"kernel", t_kernel},
           {"solve", t_solve},
           {"aggregate", t_agg},
           {"postprocess", t_post},
           {"compute_total", t_kernel + t_solve + t_agg + t_post}};
  emit_report(report, "");
  return 0;
}

// ------------------------------------------------------------ analyze ----

struct AnalyzeArgs {
  std::string input;
  std::string input_format = "raw-f32";
  std::optional<double> power;
  std::optional<double> gamma;
  double tau = 0.5;
  int iters = 10;
  std::string report_path;
  std::string csv_path;
};

void write_analysis_csv(const std::string& path, const Vector<double>& spectrum,
                        const Vector<double>& contributions) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), errc::io_error, "cannot open '" + path + "' for writing");
  out << "series,index,value\n";
  char buf[64];
  for (Index i = 0; i < spectrum.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", spectrum[i]);
    out << "spectrum," << i << ',' << buf << '\n';
  }
  for (Index i = 0; i < contributions.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", contributions[i]);
    out << "contribution," << i << ',' << buf << '\n';
  }
  require(out.good(), errc::io_error, "write failed for '" + path + "'");
}

int cmd_analyze(const GlobalOptions& global, const AnalyzeArgs& args) {
  require(args.power.has_value() != args.gamma.has_value(),
          errc::invalid_argument, "analyze needs exactly one of --power, --gamma");
  const auto fs = load_features<double>(args.input,
                                        parse_file_format(args.input_format));
  (void)global;

  json report;
  report["command"] = "analyze";
  report["input"] = args.input;
  report["n"] = fs.count();
  report["d"] = fs.dim();

  Vector<double> spectrum;
  Vector<double> contributions;

  if (args.power) {
    const auto contrib = contributions_vs_power(fs, *args.power);
    const auto spec = spectrum_report(
        fs, SpectrumMethod<double>::power(*args.power));
    spectrum = spec.spectrum;
    contributions = contrib.contributions;

    report["mode"] = "power";
    report["power"] = *args.power;
    report["rho"] = contrib.rho;
    report["eigenvalues"] = std::vector<double>(
        contrib.eigenvalues.data(),
        contrib.eigenvalues.data() + contrib.eigenvalues.size());
    report["contributions"] = std::vector<double>(
        contributions.data(), contributions.data() + contributions.size());
    report["stats"] = json{{"sum", contrib.sum_c},   {"mean", contrib.mean},
                           {"max", contrib.max},     {"min", contrib.min},
                           {"variance", contrib.variance},
                           {"r_max", contrib.r_max}, {"r_min", contrib.r_min}};
    report["bounds"] = json{{"sum_identity", contrib.sum_identity},
                            {"max_upper", contrib.max_upper},
                            {"min_lower", contrib.min_lower},
                            {"var_popoviciu", contrib.var_popoviciu},
                            {"var_bhatia_davis", contrib.var_bhatia_davis},
                            {"var_spectral", contrib.var_spectral}};
    json checks = json::array();
    for (const auto& check : verify_bounds(contrib))
      checks.push_back(json{{"name", check.name},
                            {"holds", check.holds},
                            {"slack", check.slack}});
    report["bound_checks"] = checks;
    report["spectrum_report"] = to_json(spec);
  } else {
    SinkhornConfig<double> cfg;
    cfg.gamma = *args.gamma;
    cfg.tau = args.tau;
    cfg.iterations = args.iters;
    const auto weights = solve_gamma_democratic(second_order_kernel(fs), cfg);
    const Matrix<double> aggregate = second_order_matrix(fs, weights.alpha);
    const double rho = aggregate.norm();
    require(rho > 0, errc::zero_matrix, "aggregate matrix is zero");
    // Contributions against the l2-normalized weighted aggregate, the same
    // normalization the power mode uses.
    contributions = weights.alpha.array() *
                    ((fs.data * aggregate).cwiseProduct(fs.data))
                        .rowwise()
                        .sum()
                        .array() /
                    rho;
    const auto spec = spectrum_report_of_matrix(aggregate);
    spectrum = spec.spectrum;

    report["mode"] = "gamma-democratic";
    report["gamma"] = *args.gamma;
    report["tau"] = args.tau;
    report["iterations"] = weights.iterations_run;
    report["residual"] = weights.residual;
    report["rho"] = rho;
    report["contributions"] = std::vector<double>(
        contributions.data(), contributions.data() + contributions.size());
    const double mean = contributions.mean();
    report["stats"] =
        json{{"sum", contributions.sum()},
             {"mean", mean},
             {"max", contributions.maxCoeff()},
             {"min", contributions.minCoeff()},
             {"variance",
              (contributions.array() - mean).square().sum() /
                  double(contributions.size())}};
    report["spectrum_report"] = to_json(spec);
  }

  if (!args.csv_path.empty()) {
    write_analysis_csv(args.csv_path, spectrum, contributions);
    report["csv"] = args.csv_path;
  }
  emit_report(report, args.report_path);
  if (!args.report_path.empty()) {
    // Keep stdout terse when the full report went to a file.
    std::cout << json{{"command", "analyze"},
                      {"report", args.report_path}}
                     .dump(2)
              << "\n";
  }
  return 0;
}

// ----------------------------------------------------------- classify ----

struct ClassifyArgs {
  std::vector<std::string> train_desc;
  std::string train_labels;
  std::vector<std::string> test_desc;
  std::string test_labels;
  std::string desc_format = "raw-f32";
  double reg_c = 1.0;
  std::string out;
};

Matrix<double> stack_descriptor_files(const std::vector<std::string>& paths,
                                      FileFormat format) {
  std::vector<Matrix<double>> parts;
  Index rows = 0, cols = -1;
  for (const auto& path : paths) {
    parts.push_back(load_matrix<double>(path, format));
    rows += parts.back().rows();
    if (cols < 0) cols = parts.back().cols();
    require(parts.back().cols() == cols, errc::dimension_mismatch,
            "descriptor width mismatch in '" + path + "'");
  }
  Matrix<double> stacked(rows, cols);
  Index at = 0;
  for (const auto& part : parts) {
    stacked.middleRows(at, part.rows()) = part;
    at += part.rows();
  }
  return stacked;
}

int cmd_classify(const GlobalOptions& global, const ClassifyArgs& args) {
  (void)global;
  const FileFormat format = parse_file_format(args.desc_format);
  const auto train = make_labeled_set<double>(
      stack_descriptor_files(args.train_desc, format),
      load_labels(args.train_labels));
  const auto model = train_ovr_linear(train, args.reg_c);

  json report;
  report["command"] = "classify";
  report["num_classes"] = train.num_classes;
  report["descriptor_dim"] = train.descriptors.cols();
  report["reg_c"] = args.reg_c;
  report["train_size"] = train.descriptors.rows();

  const auto train_pred = predict(model, train.descriptors);
  report["train_accuracy"] = accuracy(train.labels, train_pred);

  if (!args.test_desc.empty()) {
    require(!args.test_labels.empty(), errc::invalid_argument,
            "--test-desc needs --test-labels");
    const Matrix<double> test = stack_descriptor_files(args.test_desc, format);
    const auto labels = load_labels(args.test_labels);
    require(test.rows() == static_cast<Index>(labels.size()),
            errc::dimension_mismatch,
            "test label count does not match descriptor count");
    const auto pred = predict(model, test);
    report["test_size"] = test.rows();
    report["test_accuracy"] = accuracy(labels, pred);
    const auto per_class = per_class_accuracy(labels, pred, train.num_classes);
    report["per_class_accuracy"] = per_class;
    double mean = 0;
    for (double a : per_class) mean += a;
    report["mean_per_class_accuracy"] = mean / per_class.size();
  }
  emit_report(report, args.out);
  return 0;
}

// -------------------------------------------------------------- bench ----

struct BenchArgs {
  Index n = 784;
  Index d = 512;
  int iters = 10;
  int newton_iters = 20;
  int repeats = 5;
  bool sweep = false;
  std::string out;
};

json to_json(const ScalingFit& fit) {
  json points = json::array();
  for (const auto& p : fit.points)
    points.push_back(json{{"size", p.size},
                          {"per_iteration_ms", p.per_iteration_ms}});
  return json{{"points", points}, {"exponent", fit.exponent}};
}

int cmd_bench(const GlobalOptions& global, const BenchArgs& args) {
  // Single-threaded on both sides so the comparison is fair.
  Eigen::setNbThreads(1);
  const auto result = run_pooling_bench(args.n, args.d, args.iters,
                                        args.newton_iters, args.repeats,
                                        global.seed == 0 ? 42 : global.seed);
  json report;
  report["command"] = "bench";
  report["n"] = result.n;
  report["d"] = result.d;
  report["sinkhorn_iterations"] = result.sinkhorn_iterations;
  report["newton_iterations"] = result.newton_iterations;
  report["repeats"] = result.repeats;
  report["kernel_build_ms"] = result.kernel_build_ms;
  report["sinkhorn_iters_ms"] = result.sinkhorn_iters_ms;
  report["covariance_build_ms"] = result.covariance_build_ms;
  report["newton_sqrt_ms"] = result.newton_sqrt_ms;
  report["sinkhorn_phase_ms"] = result.sinkhorn_phase_ms;
  report["newton_phase_ms"] = result.newton_phase_ms;
  report["newton_over_sinkhorn_iters"] = result.newton_over_sinkhorn_iters;

  if (args.sweep) {
    report["sinkhorn_scaling"] = to_json(
        sinkhorn_scaling({256, 512, 1024, 2048}, 16, args.iters, args.repeats));
    report["newton_scaling"] = to_json(
        newton_scaling({64, 128, 256, 512}, 128, args.newton_iters,
                       args.repeats));
  }
  emit_report(report, args.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"democratic second-order feature pooling"};
  app.require_subcommand(1);
  app.fallthrough();  // lets global flags appear after the subcommand too

  GlobalOptions global;
  app.add_option("--seed", global.seed, "global PRNG seed");
  app.add_option("--threads", global.threads, "Eigen thread count");
  app.add_option("--format", global.format,
                 "data file format: csv, raw-f32, json (descriptors only)")
      ->check(CLI::IsMember({"csv", "raw-f32", "json"}));

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate synthetic features");
  gen_cmd->add_option("--n", gen.spec.n, "feature count");
  gen_cmd->add_option("--d", gen.spec.d, "feature dimension");
  gen_cmd->add_option("--burst", gen.spec.burst_fraction, "burst fraction");
  gen_cmd->add_option("--signal", gen.spec.signal_fraction, "signal fraction");
  gen_cmd->add_option("--noise", gen.spec.noise_scale, "noise scale");
  gen_cmd->add_option("--class-id", gen.spec.class_id, "class label");
  gen_cmd->add_option("--out", gen.out, "output feature file")->required();

  AggregateArgs agg;
  auto* agg_cmd =
      app.add_subcommand("aggregate", "pool features into a descriptor");
  agg_cmd->add_option("--input", agg.input, "feature file")->required();
  agg_cmd->add_option("--input-format", agg.input_format,
                      "input format: csv, raw-f32")
      ->check(CLI::IsMember({"csv", "raw-f32"}));
  agg_cmd->add_option("--out", agg.out, "output descriptor file")->required();
  agg_cmd->add_option("--order", agg.order, "1 = first, 2 = second order");
  agg_cmd->add_option("--encoder", agg.encoder, "explicit or sketch")
      ->check(CLI::IsMember({"explicit", "sketch"}));
  agg_cmd->add_option("--gamma", agg.gamma,
                      "gamma-democratic weighting (0 = democratic, 1 = sum)");
  agg_cmd->add_option("--power", agg.power,
                      "matrix power normalization exponent in (0,1]");
  agg_cmd->add_option("--tau", agg.tau, "Sinkhorn damping exponent");
  agg_cmd->add_option("--iters", agg.iters, "Sinkhorn iterations");
  agg_cmd->add_option("--sketch-dim", agg.sketch_dim, "sketch dimension");
  agg_cmd->add_option("--sketch-seed", agg.sketch_seed, "sketch hash seed");
  agg_cmd->add_option("--sqrt-method", agg.sqrt_method, "eig or newton")
      ->check(CLI::IsMember({"eig", "newton"}));
  agg_cmd->add_option("--newton-iters", agg.newton_iters,
                      "Newton-Schulz iterations");
  agg_cmd->add_flag("--drop-zero-rows", agg.drop_zero_rows,
                    "drop zero-norm rows instead of erroring");
  agg_cmd->add_option("--dump-kernel", agg.dump_kernel,
                      "write the kernel matrix to this CSV for debugging");

  AnalyzeArgs ana;
  auto* ana_cmd = app.add_subcommand(
      "analyze", "spectrum and contribution report for one feature set");
  ana_cmd->add_option("--input", ana.input, "feature file")->required();
  ana_cmd->add_option("--input-format", ana.input_format,
                      "input format: csv, raw-f32")
      ->check(CLI::IsMember({"csv", "raw-f32"}));
  ana_cmd->add_option("--power", ana.power, "matrix power exponent");
  ana_cmd->add_option("--gamma", ana.gamma, "gamma-democratic parameter");
  ana_cmd->add_option("--tau", ana.tau, "Sinkhorn damping exponent");
  ana_cmd->add_option("--iters", ana.iters, "Sinkhorn iterations");
  ana_cmd->add_option("--report", ana.report_path, "write JSON report here");
  ana_cmd->add_option("--csv", ana.csv_path,
                      "write spectrum/contribution series as CSV");

  ClassifyArgs cls;
  auto* cls_cmd =
      app.add_subcommand("classify", "one-vs-rest linear classification");
  cls_cmd->add_option("--train-desc", cls.train_desc, "training descriptor files")
      ->required();
  cls_cmd->add_option("--train-labels", cls.train_labels, "training labels CSV")
      ->required();
  cls_cmd->add_option("--test-desc", cls.test_desc, "test descriptor files");
  cls_cmd->add_option("--test-labels", cls.test_labels, "test labels CSV");
  cls_cmd->add_option("--desc-format", cls.desc_format,
                      "descriptor file format: csv, raw-f32")
      ->check(CLI::IsMember({"csv", "raw-f32"}));
  cls_cmd->add_option("--reg-c", cls.reg_c, "squared-hinge C parameter");
  cls_cmd->add_option("--out", cls.out, "write JSON report here");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand(
      "bench", "Sinkhorn vs Newton-Schulz runtime comparison");
  bench_cmd->add_option("--n", bench.n, "feature count");
  bench_cmd->add_option("--d", bench.d, "feature dimension");
  bench_cmd->add_option("--iters", bench.iters, "Sinkhorn iterations");
  bench_cmd->add_option("--newton-iters", bench.newton_iters,
                        "Newton-Schulz iterations");
  bench_cmd->add_option("--repeats", bench.repeats, "timed repeats");
  bench_cmd->add_flag("--sweep", bench.sweep,
                      "fit per-iteration scaling exponents across sizes");
  bench_cmd->add_option("--out", bench.out, "write JSON report here");

  CLI11_PARSE(app, argc, argv);

  Eigen::setNbThreads(global.threads);

  try {
    if (gen_cmd->parsed()) return cmd_gen(global, gen);
    if (agg_cmd->parsed()) return cmd_aggregate(global, agg);
    if (ana_cmd->parsed()) return cmd_analyze(global, ana);
    if (cls_cmd->parsed()) return cmd_classify(global, cls);
    if (bench_cmd->parsed()) return cmd_bench(global, bench);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
