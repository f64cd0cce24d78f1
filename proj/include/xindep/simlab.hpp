#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "xindep/core_data.hpp"
#include "xindep/csv.hpp"
#include "xindep/errors.hpp"
#include "xindep/kernels.hpp"
#include "xindep/parallel.hpp"
#include "xindep/reference.hpp"
#include "xindep/rng.hpp"
#include "xindep/testing.hpp"

namespace xindep::simlab {

// ---------------------------------------------------------------------------
// Generators

/// sign(x) |x|^b; the ordinary power for integer b on any x.
inline double signed_power(double x, double b) {
  const double rounded = std::round(b);
  if (rounded == b && std::abs(b) < 64) return std::pow(x, b);
  return std::copysign(std::pow(std::abs(x), b), x);
}

inline RowMatrix normal_table(std::size_t rows, std::size_t cols, RngStream& rng) {
  RowMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = rng.standard_normal();
  return out;
}

inline PairedSample gen_independent_gaussian(std::size_t n_pairs, std::size_t d, RngStream& rng,
                                             std::size_t dy = 0) {
  RowMatrix x = normal_table(n_pairs, d, rng);
  RowMatrix y = normal_table(n_pairs, dy == 0 ? d : dy, rng);
  return PairedSample(std::move(x), std::move(y));
}

/// X and Y with i.i.d. Student-t(dof) entries, independent of each other.
inline PairedSample gen_independent_t(std::size_t n_pairs, std::size_t d, int dof, RngStream& rng,
                                      std::size_t dy = 0) {
  require(dof >= 1, "degrees of freedom must be >= 1");
  if (dy == 0) dy = d;
  RowMatrix x(static_cast<Eigen::Index>(n_pairs), static_cast<Eigen::Index>(d));
  RowMatrix y(static_cast<Eigen::Index>(n_pairs), static_cast<Eigen::Index>(dy));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.student_t(dof);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.student_t(dof);
  return PairedSample(std::move(x), std::move(y));
}

/// Y = eps X^b + (1 - eps) X'^b componentwise, X and X' independent N(0, I_d).
inline PairedSample gen_dependent_power(std::size_t n_pairs, std::size_t d, double epsilon,
                                        double b, RngStream& rng) {
  require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
  require(b > 0.0, "exponent b must be positive");
  RowMatrix x = normal_table(n_pairs, d, rng);
  RowMatrix x_prime = normal_table(n_pairs, d, rng);
  RowMatrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y.data()[i] = epsilon * signed_power(x.data()[i], b) +
                  (1.0 - epsilon) * signed_power(x_prime.data()[i], b);
  }
  return PairedSample(std::move(x), std::move(y));
}

/// Independent univariate Bernoulli(p) X and Y with p = sqrt(lambda / rate_size);
/// rate_size defaults to n_pairs.
inline PairedSample gen_bernoulli_poisson(std::size_t n_pairs, double lambda, RngStream& rng,
                                          std::size_t rate_size = 0) {
  require(lambda > 0.0, "lambda must be positive");
  if (rate_size == 0) rate_size = n_pairs;
  const double p = std::sqrt(lambda / static_cast<double>(rate_size));
  require(p <= 1.0, "Bernoulli parameter sqrt(lambda / n) exceeds 1");
  RowMatrix x(static_cast<Eigen::Index>(n_pairs), 1);
  RowMatrix y(static_cast<Eigen::Index>(n_pairs), 1);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = rng.bernoulli(p) ? 1.0 : 0.0;
    y(static_cast<Eigen::Index>(i), 0) = rng.bernoulli(p) ? 1.0 : 0.0;
  }
  return PairedSample(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Summaries

/// sup_x |F_m(x) - Phi(x)| for the empirical CDF F_m of the samples.
inline double ks_statistic_vs_standard_normal(std::vector<double> samples) {
  require(samples.size() >= 2, "KS statistic needs at least two samples");
  for (double s : samples) require(std::isfinite(s), "KS statistic: samples must be finite");
  std::sort(samples.begin(), samples.end());
  const auto m = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = normal_cdf(samples[i]);
    worst = std::max(worst, std::max(static_cast<double>(i + 1) / m - cdf,
                                     cdf - static_cast<double>(i) / m));
  }
  return worst;
}

/// P(sign(V') V <= 0) for V, V' i.i.d. Poisson(lambda) - lambda, by summing the pmf.
inline double poisson_sign_target(double lambda) {
  require(lambda > 0.0, "lambda must be positive");
  double below = 0.0, at = 0.0, above = 0.0;  // P(V < 0), P(V = 0), P(V > 0)
  double pmf = std::exp(-lambda);
  double total = 0.0;
  for (int k = 0; total < 1.0 - 1e-17 && k < 100000; ++k) {
    if (k > 0) pmf *= lambda / k;
    const double centred = k - lambda;
    if (centred < 0) below += pmf;
    else if (centred == 0) at += pmf;
    else above += pmf;
    total += pmf;
    if (k > lambda && pmf < 1e-300) break;
  }
  // sign(V') = 0 gives a product of 0 <= 0.
  return at + above * (below + at) + below * (above + at);
}

// ---------------------------------------------------------------------------
// Experiments

enum class Design { null_distribution, type1_curve, power_curve, power_vs_time, poisson_example };
enum class Marginal { gaussian, student_t };
enum class Method { cross_hsic, cross_dcov, perm_hsic };

inline std::string to_string(Design d) {
  switch (d) {
    case Design::null_distribution: return "null_distribution";
    case Design::type1_curve: return "type1_curve";
    case Design::power_curve: return "power_curve";
    case Design::power_vs_time: return "power_vs_time";
    case Design::poisson_example: return "poisson_example";
  }
  return "unknown";
}
inline std::string to_string(Marginal m) { return m == Marginal::gaussian ? "gaussian" : "t"; }
inline std::string to_string(Method m) {
  switch (m) {
    case Method::cross_hsic: return "cross_hsic";
    case Method::cross_dcov: return "cross_dcov";
    case Method::perm_hsic: return "perm_hsic";
  }
  return "unknown";
}

/// A Monte-Carlo design. `n_grid` entries are numbers of generated pairs N;
/// in the poisson design the Bernoulli rate uses the per-half size N/2.
struct ExperimentConfig {
  Design design = Design::type1_curve;
  Marginal marginal = Marginal::gaussian;  // null designs
  int dof = 3;
  std::size_t d = 10;
  std::size_t dy = 0;  // 0 means same as d
  double epsilon = 0.4;
  double b = 2.0;
  double lambda = 1.5;
  Method method = Method::cross_hsic;
  KernelFamily kernel = KernelFamily::gaussian;
  std::optional<double> scale;  // empty: median heuristic
  double rq_alpha = 1.0;
  std::vector<std::size_t> n_grid{200};
  std::size_t trials = 100;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::size_t permutations = 150;
  PermutationStatistic perm_statistic = PermutationStatistic::unbiased;
  std::size_t threads = 1;

  void validate() const {
    require(trials >= 1, "trials must be >= 1");
    require(!n_grid.empty(), "n grid must not be empty");
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
      require(n_grid[i] > n_grid[i - 1], "n grid must be strictly increasing");
    }
    require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
    require(dof >= 1, "dof must be >= 1");
    require(lambda > 0.0, "lambda must be positive");
    require(b > 0.0, "b must be positive");
    require(d >= 1, "d must be >= 1");
    require_alpha(alpha);
    require(permutations >= 1, "permutations must be >= 1");
    if (scale) require(*scale > 0.0, "kernel scale must be positive");
  }

  [[nodiscard]] std::size_t y_dim() const { return dy == 0 ? d : dy; }

  [[nodiscard]] KernelSpec kernel_spec() const {
    if (kernel == KernelFamily::linear) return KernelSpec::linear();
    KernelSpec spec = scale ? (kernel == KernelFamily::gaussian
                                   ? KernelSpec::gaussian(*scale)
                                   : KernelSpec::rational_quadratic(*scale, rq_alpha))
                            : KernelSpec::with_median(kernel, rq_alpha);
    return spec;
  }

  /// First and second generator parameters as reported in the results file.
  [[nodiscard]] std::pair<double, double> reported_params() const {
    switch (design) {
      case Design::null_distribution:
      case Design::type1_curve:
        return {marginal == Marginal::student_t ? static_cast<double>(dof) : 0.0, 0.0};
      case Design::power_curve:
      case Design::power_vs_time: return {epsilon, b};
      case Design::poisson_example: return {lambda, poisson_sign_target(lambda)};
    }
    return {0.0, 0.0};
  }
};

struct CellRecord {
  std::size_t n = 0;
  double rejection_rate = 0.0;
  double mean_seconds = 0.0;
  std::vector<double> statistics;
  std::vector<bool> degenerate;
  std::size_t degenerate_count = 0;
  std::optional<double> ks;  // null_distribution only
  bool failed = false;
  std::string failure;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<CellRecord> cells;
  double wall_seconds = 0.0;

  [[nodiscard]] std::size_t succeeded() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const CellRecord& c) { return !c.failed; }));
  }
};

/// Stream for (cell, trial); every trial is reproducible in isolation.
inline RngStream trial_stream(std::uint64_t seed, std::size_t cell, std::size_t trial) {
  return RngStream(seed, (static_cast<std::uint64_t>(cell) << 32) | static_cast<std::uint64_t>(trial));
}

inline PairedSample generate(const ExperimentConfig& c, std::size_t n_pairs, RngStream& rng) {
  switch (c.design) {
    case Design::null_distribution:
    case Design::type1_curve:
      return c.marginal == Marginal::gaussian ? gen_independent_gaussian(n_pairs, c.d, rng, c.dy)
                                              : gen_independent_t(n_pairs, c.d, c.dof, rng, c.dy);
    case Design::power_curve:
    case Design::power_vs_time: return gen_dependent_power(n_pairs, c.d, c.epsilon, c.b, rng);
    case Design::poisson_example:
      return gen_bernoulli_poisson(n_pairs, c.lambda, rng, n_pairs / 2);
  }
  throw ContractError("unknown design");
}

struct TrialOutput {
  double statistic = 0.0;
  bool degenerate = false;
  bool reject = false;
  double seconds = 0.0;
};

inline TrialOutput run_trial(const ExperimentConfig& c, std::size_t n_pairs, RngStream rng) {
  const PairedSample sample = generate(c, n_pairs, rng);
  TrialOutput out;
  if (c.design == Design::poisson_example) {
    // Univariate linear kernels: the O(n) scalar factorisation gives the same
    // studentized statistic as the general path.
    const auto start = std::chrono::steady_clock::now();
    const SplitView split = make_split(sample);
    const double stat = reference::linear_warmup_components(sample, split).studentized(split.n);
    out.seconds = detail::seconds_since(start);
    out.statistic = stat;
    out.degenerate = !std::isfinite(stat);
    out.reject = !out.degenerate && stat <= 0.0;  // event of interest: statistic <= 0
    return out;
  }
  TestOutcome outcome;
  switch (c.method) {
    case Method::cross_hsic:
      outcome = cross_hsic_test(sample, c.kernel_spec(), c.kernel_spec(), c.alpha);
      break;
    case Method::cross_dcov:
      outcome = cross_dcov_test(sample, MetricSpec::euclidean(), MetricSpec::euclidean(), c.alpha);
      break;
    case Method::perm_hsic:
      outcome = permutation_hsic_test(sample, c.kernel_spec(), c.kernel_spec(), c.alpha,
                                      c.permutations, rng.child(0xC0FFEE), 1, c.perm_statistic);
      break;
  }
  out.statistic = outcome.statistic;
  out.degenerate = outcome.diagnostics.count("degenerate_variance") &&
                   outcome.diagnostics.at("degenerate_variance") != 0.0;
  out.reject = outcome.reject;
  out.seconds = outcome.elapsed_seconds;
  return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.design == Design::null_distribution) {
    require(config.method != Method::perm_hsic,
            "null_distribution records studentized statistics; use cross_hsic or cross_dcov");
  }
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config = config;
  result.cells.resize(config.n_grid.size());

  for (std::size_t cell = 0; cell < config.n_grid.size(); ++cell) {
    CellRecord& record = result.cells[cell];
    record.n = config.n_grid[cell];
    try {
      std::vector<TrialOutput> trials(config.trials);
      // Permutation replicates stay sequential inside a trial; trials run in parallel.
      parallel_for(config.trials, config.threads, [&](std::size_t t) {
        trials[t] = run_trial(config, record.n, trial_stream(config.seed, cell, t));
      });
      std::size_t events = 0, counted = 0;
      double seconds = 0.0;
      for (const auto& t : trials) {
        record.statistics.push_back(t.statistic);
        record.degenerate.push_back(t.degenerate);
        seconds += t.seconds;
        if (t.degenerate) {
          ++record.degenerate_count;
          // A degenerate cross test does not reject; in the poisson design the
          // trial carries no sign information and is left out.
          if (config.design != Design::poisson_example) ++counted;
          continue;
        }
        ++counted;
        if (t.reject) ++events;
      }
      record.rejection_rate = counted ? static_cast<double>(events) / static_cast<double>(counted) : 0.0;
      record.mean_seconds = seconds / static_cast<double>(config.trials);
      if (config.design == Design::null_distribution) {
        std::vector<double> finite;
        for (std::size_t t = 0; t < trials.size(); ++t) {
          if (!record.degenerate[t]) finite.push_back(record.statistics[t]);
        }
        if (finite.size() >= 2) record.ks = ks_statistic_vs_standard_normal(finite);
      }
    } catch (const std::exception& e) {
      record.failed = true;
      record.failure = e.what();
    }
  }
  result.wall_seconds = detail::seconds_since(start);
  return result;
}

// ---------------------------------------------------------------------------
// Output

inline const char* kResultsHeader =
    "design,n,d,param1,param2,alpha,trials,rejection_rate,mean_seconds,seed";
inline const char* kStatisticsHeader = "trial,statistic,degenerate";

inline std::string statistics_path(const std::string& path, std::size_t n, bool multi) {
  if (!multi) return path;
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + ".n" + std::to_string(n) + p.extension().string()))
      .string();
}

/// Writes one row per successful cell. null_distribution results instead go to
/// trial,statistic,degenerate files (one per cell, suffixed .n<N> when the grid
/// has several entries). mean_seconds is the only non-deterministic column.
inline void write_results_csv(const ExperimentResult& result, const std::string& path,
                              bool include_timing = true) {
  const auto& c = result.config;
  if (c.design == Design::null_distribution) {
    const bool multi = result.cells.size() > 1;
    if (result.cells.empty()) {
      std::ofstream out(path);
      if (!out) throw InputError("cannot write results file: " + path);
      out << kStatisticsHeader << '\n';
      return;
    }
    for (const auto& cell : result.cells) {
      const std::string target = statistics_path(path, cell.n, multi);
      std::ofstream out(target);
      if (!out) throw InputError("cannot write results file: " + target);
      out << kStatisticsHeader << '\n';
      for (std::size_t t = 0; t < cell.statistics.size(); ++t) {
        out << t << ',' << (cell.degenerate[t] ? "nan" : format_double(cell.statistics[t])) << ','
            << (cell.degenerate[t] ? 1 : 0) << '\n';
      }
    }
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write results file: " + path);
  out << kResultsHeader << '\n';
  const auto [p1, p2] = c.reported_params();
  for (const auto& cell : result.cells) {
    if (cell.failed) continue;
    out << to_string(c.design) << ',' << cell.n << ',' << c.d << ',' << format_double(p1) << ','
        << format_double(p2) << ',' << format_double(c.alpha) << ',' << c.trials << ','
        << format_double(cell.rejection_rate) << ','
        << format_double(include_timing ? cell.mean_seconds : 0.0) << ',' << c.seed << '\n';
  }
  if (!out) throw InputError("failed while writing: " + path);
}

// ---------------------------------------------------------------------------
// Config files: one `key = value` per line, '#' starts a comment.

namespace detail {

inline std::string trim_copy(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline double parse_real(const std::string& key, const std::string& text) {
  bool ok = false;
  const double v = parse_double(text, &ok);
  if (!ok) throw InputError("'" + key + "' expects a number, got '" + text + "'");
  return v;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (text.empty() || r.ec != std::errc() || r.ptr != end) {
    throw InputError("'" + key + "' expects a nonnegative integer, got '" + text + "'");
  }
  return v;
}

}  // namespace detail

inline std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim_copy(item);
    if (item.empty()) throw InputError("grid: empty entry in '" + text + "'");
    grid.push_back(static_cast<std::size_t>(detail::parse_count("grid entry", item)));
  }
  if (grid.empty()) throw InputError("grid: no entries");
  return grid;
}

inline KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "linear") return KernelFamily::linear;
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "rq" || name == "rational_quadratic" || name == "rational-quadratic")
    return KernelFamily::rational_quadratic;
  if (name == "distance" || name == "distance_induced") return KernelFamily::distance_induced;
  throw InputError("unknown kernel family '" + name + "'");
}

inline Method parse_method(const std::string& name) {
  if (name == "cross_hsic" || name == "cross-hsic") return Method::cross_hsic;
  if (name == "cross_dcov" || name == "cross-dcov") return Method::cross_dcov;
  if (name == "perm_hsic" || name == "perm-hsic") return Method::perm_hsic;
  throw InputError("unknown method '" + name + "'");
}

inline Design parse_design(const std::string& name) {
  if (name == "null_distribution" || name == "null") return Design::null_distribution;
  if (name == "type1_curve" || name == "type1") return Design::type1_curve;
  if (name == "power_curve" || name == "power") return Design::power_curve;
  if (name == "power_vs_time") return Design::power_vs_time;
  if (name == "poisson_example" || name == "poisson") return Design::poisson_example;
  throw InputError("unknown design '" + name + "'");
}

/// Applies one key/value pair; unknown keys are input errors.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "design") c.design = parse_design(value);
  else if (key == "marginal") {
    if (value == "gaussian") c.marginal = Marginal::gaussian;
    else if (value == "t" || value == "student_t") c.marginal = Marginal::student_t;
    else throw InputError("config: unknown marginal '" + value + "'");
  } else if (key == "dof") c.dof = static_cast<int>(detail::parse_count(key, value));
  else if (key == "d") c.d = detail::parse_count(key, value);
  else if (key == "dy") c.dy = detail::parse_count(key, value);
  else if (key == "epsilon") c.epsilon = detail::parse_real(key, value);
  else if (key == "b") c.b = detail::parse_real(key, value);
  else if (key == "lambda") c.lambda = detail::parse_real(key, value);
  else if (key == "method") c.method = parse_method(value);
  else if (key == "kernel") c.kernel = parse_kernel_family(value);
  else if (key == "bandwidth") {
    if (value == "median") c.scale.reset();
    else c.scale = detail::parse_real(key, value);
  } else if (key == "rq_alpha") c.rq_alpha = detail::parse_real(key, value);
  else if (key == "n") c.n_grid = parse_grid(value);
  else if (key == "trials") c.trials = detail::parse_count(key, value);
  else if (key == "alpha") c.alpha = detail::parse_real(key, value);
  else if (key == "seed") c.seed = detail::parse_count(key, value);
  else if (key == "permutations" || key == "B") c.permutations = detail::parse_count(key, value);
  else if (key == "perm_statistic") {
    if (value == "unbiased") c.perm_statistic = PermutationStatistic::unbiased;
    else if (value == "biased") c.perm_statistic = PermutationStatistic::biased;
    else throw InputError("config: perm_statistic must be 'unbiased' or 'biased', got '" + value + "'");
  }
  else if (key == "threads") c.threads = detail::parse_count(key, value);
  else throw InputError("config: unknown key '" + key + "'");
}

inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {}) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim_copy(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(number) + ": expected key = value");
    }
    apply_setting(base, detail::trim_copy(line.substr(0, eq)), detail::trim_copy(line.substr(eq + 1)));
  }
  return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  return parse_config(in, std::move(base));
}

inline std::string config_to_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "design = " << to_string(c.design) << '\n'
      << "marginal = " << to_string(c.marginal) << '\n'
      << "dof = " << c.dof << '\n'
      << "d = " << c.d << '\n'
      << "dy = " << c.dy << '\n'
      << "epsilon = " << format_double(c.epsilon) << '\n'
      << "b = " << format_double(c.b) << '\n'
      << "lambda = " << format_double(c.lambda) << '\n'
      << "method = " << to_string(c.method) << '\n'
      << "kernel = " << xindep::to_string(c.kernel) << '\n'
      << "bandwidth = " << (c.scale ? format_double(*c.scale) : std::string("median")) << '\n'
      << "rq_alpha = " << format_double(c.rq_alpha) << '\n'
      << "n = ";
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) out << (i ? "," : "") << c.n_grid[i];
  out << '\n'
      << "trials = " << c.trials << '\n'
      << "alpha = " << format_double(c.alpha) << '\n'
      << "seed = " << c.seed << '\n'
      << "permutations = " << c.permutations << '\n'
      << "perm_statistic = " << xindep::to_string(c.perm_statistic) << '\n';
  return out.str();
}

}  // namespace xindep::simlab
