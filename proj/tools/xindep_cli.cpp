#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xindep/xindep.hpp"

namespace {

using namespace xindep;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("XINDEP_SEED")) {
    const std::string text(env);
    std::uint64_t v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size()) {
      throw InputError("XINDEP_SEED must be a nonnegative integer, got '" + text + "'");
    }
    return v;
  }
  return fallback;
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------------
// test

struct TestArgs {
  std::string method = "cross-hsic";
  std::string kernel = "gaussian";
  std::string bandwidth = "median";
  double rq_alpha = 1.0;
  double metric_q = 1.0;
  std::string variant = "doubled";
  double alpha = 0.05;
  std::string in;
  std::size_t d1 = 0, d2 = 0;
  std::size_t permutations = 150;
  std::optional<std::uint64_t> seed;
  bool shuffle = false;
  std::size_t anchor = 0;
  std::string out;
  std::size_t threads = 1;
  std::string perm_statistic = "unbiased";
  bool no_timing = false;
};

PermutationStatistic perm_statistic_from(const std::string& name) {
  if (name == "unbiased") return PermutationStatistic::unbiased;
  if (name == "biased") return PermutationStatistic::biased;
  throw InputError("--perm-statistic must be 'unbiased' or 'biased', got '" + name + "'");
}

MetricSpec metric_from(double q) {
  return q == 1.0 ? MetricSpec::euclidean() : MetricSpec::euclidean_power(q);
}

DistanceVariant variant_from(const std::string& name) {
  if (name == "doubled") return DistanceVariant::doubled;
  if (name == "classical") return DistanceVariant::classical;
  throw InputError("unknown distance variant '" + name + "'");
}

KernelSpec kernel_from(const TestArgs& a, const PairedSample* sample, bool for_y) {
  const KernelFamily family = simlab::parse_kernel_family(a.kernel);
  switch (family) {
    case KernelFamily::linear: return KernelSpec::linear();
    case KernelFamily::gaussian:
    case KernelFamily::rational_quadratic: {
      if (a.bandwidth == "median") return KernelSpec::with_median(family, a.rq_alpha);
      bool ok = false;
      const double c = parse_double(a.bandwidth, &ok);
      if (!ok) throw InputError("--bandwidth expects 'median' or a number, got '" + a.bandwidth + "'");
      return family == KernelFamily::gaussian ? KernelSpec::gaussian(c)
                                              : KernelSpec::rational_quadratic(c, a.rq_alpha);
    }
    case KernelFamily::distance_induced: {
      std::vector<double> anchor;
      if (sample) {
        require(a.anchor < sample->size(), "--anchor index outside the sample");
        const auto row = for_y ? sample->y(a.anchor) : sample->x(a.anchor);
        anchor.assign(row.begin(), row.end());
      } else {
        anchor.assign(for_y ? a.d2 : a.d1, 0.0);
      }
      return KernelSpec::distance(metric_from(a.metric_q), anchor, variant_from(a.variant));
    }
  }
  throw InputError("unknown kernel family");
}

int run_test(const TestArgs& a) {
  // Everything that can be checked without the data is checked first.
  require_alpha(a.alpha);
  simlab::parse_method(a.method);
  require(a.d1 >= 1 && a.d2 >= 1, "--d1 and --d2 must be positive");
  if (a.method != "cross-dcov" && a.method != "cross_dcov") {
    KernelSpec probe_k = kernel_from(a, nullptr, false);
    if (probe_k.bandwidth == BandwidthPolicy::explicit_scale) probe_k.validate();
  } else {
    metric_from(a.metric_q).validate();
    variant_from(a.variant);
  }
  require(a.permutations >= 1, "--B must be at least 1");
  const PermutationStatistic perm_statistic = perm_statistic_from(a.perm_statistic);

  const simlab::Method method = simlab::parse_method(a.method);
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  PairedSample sample = load_csv(a.in, a.d1, a.d2);
  if (a.shuffle) {
    RngStream shuffler(seed, 1);
    const auto order = shuffler.permutation(sample.size());
    sample = permute_rows(sample, order);
  }

  TestOutcome outcome;
  switch (method) {
    case simlab::Method::cross_hsic:
      outcome = cross_hsic_test(sample, kernel_from(a, &sample, false), kernel_from(a, &sample, true), a.alpha);
      break;
    case simlab::Method::cross_dcov:
      outcome = cross_dcov_test(sample, metric_from(a.metric_q), metric_from(a.metric_q), a.alpha, a.anchor,
                                variant_from(a.variant));
      break;
    case simlab::Method::perm_hsic:
      outcome = permutation_hsic_test(sample, kernel_from(a, &sample, false), kernel_from(a, &sample, true),
                                      a.alpha, a.permutations, RngStream(seed, 0), a.threads, perm_statistic);
      break;
  }

  const std::string decision = outcome.reject ? "reject" : "no_reject";
  std::cout << "method=" << simlab::to_string(method) << '\n'
            << "statistic=" << fmt(outcome.statistic) << '\n'
            << "threshold=" << fmt(outcome.threshold) << '\n'
            << "p_value=" << (outcome.p_value ? fmt(*outcome.p_value) : std::string("none")) << '\n'
            << "decision=" << decision << '\n'
            << "alpha=" << fmt(a.alpha) << '\n'
            << "N=" << sample.size() << '\n';
  for (const auto& [key, value] : outcome.diagnostics) std::cout << "diag." << key << '=' << fmt(value) << '\n';
  if (!a.no_timing) std::cout << "elapsed_seconds=" << fmt(outcome.elapsed_seconds) << '\n';

  if (!a.out.empty()) {
    nlohmann::json record;
    auto number_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    record["method"] = simlab::to_string(method);
    record["statistic"] = number_or_null(outcome.statistic);
    record["threshold"] = number_or_null(outcome.threshold);
    record["p_value"] = outcome.p_value ? nlohmann::json(*outcome.p_value) : nlohmann::json(nullptr);
    record["reject"] = outcome.reject;
    record["decision"] = decision;
    record["alpha"] = a.alpha;
    record["N"] = sample.size();
    for (const auto& [key, value] : outcome.diagnostics) record["diagnostics"][key] = number_or_null(value);
    if (!a.no_timing) record["elapsed_seconds"] = outcome.elapsed_seconds;
    std::ofstream out(a.out);
    if (!out) throw InputError("cannot write report: " + a.out);
    out << record.dump(2) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config;
  std::vector<std::string> sets;
  std::map<std::string, std::string> inline_values;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool no_timing = false;
};

const std::vector<std::string> kConfigKeys{"design", "marginal", "dof",      "d",      "dy",   "epsilon",
                                           "b",      "lambda",   "method",   "kernel", "bandwidth",
                                           "rq_alpha", "n",      "trials",   "alpha",  "permutations",
                                           "perm_statistic", "threads"};

int run_simulate(const SimulateArgs& a) {
  simlab::ExperimentConfig config;
  if (!a.config.empty()) config = simlab::load_config(a.config);
  for (const auto& key : kConfigKeys) {
    if (auto it = a.inline_values.find(key); it != a.inline_values.end() && !it->second.empty()) {
      simlab::apply_setting(config, key, it->second);
    }
  }
  for (const auto& item : a.sets) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + item + "'");
    simlab::apply_setting(config, item.substr(0, eq), item.substr(eq + 1));
  }
  config.seed = resolve_seed(a.seed, config.seed);
  config.validate();

  const auto result = simlab::run_experiment(config);
  simlab::write_results_csv(result, a.out, !a.no_timing);

  const auto [p1, p2] = config.reported_params();
  std::cout << "design=" << simlab::to_string(config.design) << " method=" << simlab::to_string(config.method)
            << " kernel=" << xindep::to_string(config.kernel) << " d=" << config.d << " param1=" << fmt(p1)
            << " param2=" << fmt(p2) << " alpha=" << fmt(config.alpha) << " trials=" << config.trials
            << " seed=" << config.seed << '\n';
  for (const auto& cell : result.cells) {
    if (cell.failed) {
      std::cout << "cell n=" << cell.n << " status=failed reason=\"" << cell.failure << "\"\n";
      continue;
    }
    std::cout << "cell n=" << cell.n << " status=ok rejection_rate=" << fmt(cell.rejection_rate)
              << " degenerate=" << cell.degenerate_count;
    if (cell.ks) std::cout << " ks=" << fmt(*cell.ks);
    if (!a.no_timing) std::cout << " mean_seconds=" << fmt(cell.mean_seconds);
    std::cout << '\n';
  }
  std::cout << "cells_succeeded=" << result.succeeded() << '/' << result.cells.size() << '\n'
            << "results=" << a.out << '\n';
  if (result.succeeded() == 0) {
    std::cerr << "error: every cell failed\n";
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string grid = "500,1000,2000";
  std::size_t d = 10;
  std::string kernel = "gaussian";
  std::size_t reps = 5;
  std::optional<std::uint64_t> seed;
  bool naive = false;
  bool allow_naive_large = false;
  std::string out;
};

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

int run_bench(const BenchArgs& a) {
  const std::vector<std::size_t> grid = simlab::parse_grid(a.grid);
  for (std::size_t m : grid) {
    if (m < 3) throw InputError("bench grid entries are per-half sizes and must be >= 3, got " + std::to_string(m));
  }
  require(a.reps >= 1, "--reps must be at least 1");
  require(a.d >= 1, "--d must be positive");
  const KernelFamily family = simlab::parse_kernel_family(a.kernel);
  require(family != KernelFamily::distance_induced, "bench supports linear, gaussian and rq kernels");
  if (a.naive) {
    for (std::size_t m : grid) reference::detail::guard(m, {a.allow_naive_large});
  }
  const KernelSpec spec = family == KernelFamily::linear ? KernelSpec::linear() : KernelSpec::with_median(family);
  const std::uint64_t seed = resolve_seed(a.seed, 1);

  std::ostringstream csv;
  csv << "m,N,d,kernel,reps,median_seconds,min_seconds,xhsic,studentized,naive_seconds,naive_xhsic,"
         "naive_studentized,max_rel_diff\n";
  std::vector<double> medians;
  for (std::size_t cell = 0; cell < grid.size(); ++cell) {
    const std::size_t m = grid[cell];
    RngStream rng(seed, cell);
    const PairedSample sample = simlab::gen_independent_gaussian(2 * m, a.d, rng);
    const SplitView split = make_split(sample);
    std::vector<double> times;
    // One untimed call so first-touch allocation does not land in the first sample.
    FastStatResult fast = studentized_xhsic(sample, split, spec, spec);
    for (std::size_t r = 0; r < a.reps; ++r) {
      fast = studentized_xhsic(sample, split, spec, spec);
      times.push_back(fast.elapsed_seconds);
    }
    medians.push_back(median_of(times));
    csv << m << ',' << 2 * m << ',' << a.d << ',' << xindep::to_string(family) << ',' << a.reps << ','
        << fmt(medians.back()) << ',' << fmt(*std::min_element(times.begin(), times.end())) << ','
        << fmt(fast.xhsic) << ',' << fmt(fast.studentized);
    if (a.naive) {
      const KernelSpec k = resolve_bandwidth(spec, sample.x_rows());
      const KernelSpec l = resolve_bandwidth(spec, sample.y_rows());
      const reference::NaiveOptions options{a.allow_naive_large};
      const auto start = std::chrono::steady_clock::now();
      const auto var = reference::sn2_naive(sample, split, k, l, options);
      const double naive_seconds = xindep::detail::seconds_since(start);
      const double naive_stat = std::sqrt(static_cast<double>(m)) * var.xhsic / std::sqrt(var.s_n2);
      auto rel = [](double x, double y) {
        return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300});
      };
      const double diff = std::max(rel(fast.xhsic, var.xhsic), rel(fast.s_n2, var.s_n2));
      csv << ',' << fmt(naive_seconds) << ',' << fmt(var.xhsic) << ',' << fmt(naive_stat) << ',' << fmt(diff);
    } else {
      csv << ",,,,";
    }
    csv << '\n';
  }

  std::ostream& summary = a.out.empty() ? std::cerr : std::cout;
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(a.out);
    if (!out) throw InputError("cannot write bench output: " + a.out);
    out << csv.str();
    summary << "results=" << a.out << '\n';
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double size_ratio = static_cast<double>(grid[i]) / static_cast<double>(grid[i - 1]);
    summary << "ratio m=" << grid[i] << '/' << grid[i - 1] << " size_ratio=" << fmt(size_ratio)
            << " time_ratio=" << fmt(medians[i] / medians[i - 1]) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel independence tests and simulation lab"};
  app.require_subcommand(1);

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "Run one independence test on a CSV sample");
  test->add_option("--method", test_args.method, "cross-hsic | cross-dcov | perm-hsic")->capture_default_str();
  test->add_option("--kernel", test_args.kernel, "linear | gaussian | rq | distance")->capture_default_str();
  test->add_option("--bandwidth", test_args.bandwidth, "'median' or the scale c")->capture_default_str();
  test->add_option("--rq-alpha", test_args.rq_alpha, "rational-quadratic shape")->capture_default_str();
  test->add_option("--metric-q", test_args.metric_q, "exponent q of |x - x'|^q for distance kernels")
      ->capture_default_str();
  test->add_option("--variant", test_args.variant, "distance kernel form: doubled | classical")
      ->capture_default_str();
  test->add_option("--alpha", test_args.alpha, "level")->capture_default_str();
  test->add_option("--in", test_args.in, "input CSV")->required();
  test->add_option("--d1", test_args.d1, "dimension of X")->required();
  test->add_option("--d2", test_args.d2, "dimension of Y")->required();
  test->add_option("--B", test_args.permutations, "permutations (perm-hsic)")->capture_default_str();
  test->add_option("--seed", test_args.seed, "seed (default: XINDEP_SEED or 0)");
  test->add_flag("--shuffle", test_args.shuffle, "seeded pre-shuffle of the rows before splitting");
  test->add_option("--anchor", test_args.anchor, "row index of the distance-kernel anchor")->capture_default_str();
  test->add_option("--out", test_args.out, "write the report as JSON");
  test->add_option("--threads", test_args.threads, "worker cap (0 = all cores)")->capture_default_str();
  test->add_option("--perm-statistic", test_args.perm_statistic, "unbiased | biased (perm-hsic)")
      ->capture_default_str();
  test->add_flag("--no-timing", test_args.no_timing, "omit elapsed time from the report");

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Run a Monte-Carlo experiment");
  sim->add_option("--config", sim_args.config, "key = value config file");
  for (const auto& key : kConfigKeys) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    sim->add_option(flag, sim_args.inline_values[key], "overrides '" + key + "' from the config");
  }
  sim->add_option("--set", sim_args.sets, "extra key=value overrides");
  sim->add_option("--seed", sim_args.seed, "seed (default: XINDEP_SEED or the config)");
  sim->add_option("--out", sim_args.out, "results CSV")->required();
  sim->add_flag("--no-timing", sim_args.no_timing, "write zero timings so reruns are byte-identical");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time the quadratic path across per-half sizes");
  bench->add_option("--grid", bench_args.grid, "comma-separated per-half sizes m")->capture_default_str();
  bench->add_option("--d", bench_args.d, "dimension")->capture_default_str();
  bench->add_option("--kernel", bench_args.kernel, "linear | gaussian | rq")->capture_default_str();
  bench->add_option("--reps", bench_args.reps, "repetitions per size")->capture_default_str();
  bench->add_option("--seed", bench_args.seed, "seed (default: XINDEP_SEED or 1)");
  bench->add_flag("--naive", bench_args.naive, "also run the quartic reference path");
  bench->add_flag("--allow-naive-large", bench_args.allow_naive_large, "lift the quartic-path size limit");
  bench->add_option("--out", bench_args.out, "timing CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*test) return run_test(test_args);
    if (*sim) return run_simulate(sim_args);
    if (*bench) return run_bench(bench_args);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
