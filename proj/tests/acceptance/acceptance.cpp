// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Seeds and tolerances are fixed here and are not tuned per run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "xindep/xindep.hpp"

namespace {

using namespace xindep;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

bool close(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

PairedSample normal_sample(std::size_t rows, std::size_t dx, std::size_t dy, RngStream& rng) {
  RowMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dx));
  RowMatrix y(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dy));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.standard_normal();
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.standard_normal();
  return PairedSample(std::move(x), std::move(y));
}

// Half of the instances are independent, half have Y depending on X.
PairedSample oracle_instance(std::size_t rows, RngStream& rng) {
  const std::size_t dx = 1 + rng.uniform_index(3);
  const std::size_t dy = 1 + rng.uniform_index(3);
  PairedSample s = normal_sample(rows, dx, dy, rng);
  if (rng.bernoulli(0.5)) {
    RowMatrix y = s.y_rows();
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += std::pow(s.x_rows()(i, j % s.x_rows().cols()), 2);
    }
    s = PairedSample(s.x_rows(), y);
  }
  return s;
}

struct Families {
  std::string name;
  std::function<std::pair<KernelSpec, KernelSpec>(const PairedSample&)> make;
};

std::vector<Families> families() {
  return {
      {"linear", [](const PairedSample&) { return std::pair{KernelSpec::linear(), KernelSpec::linear()}; }},
      {"gaussian",
       [](const PairedSample& s) {
         return std::pair{resolve_bandwidth(KernelSpec::with_median(KernelFamily::gaussian), s.x_rows()),
                          resolve_bandwidth(KernelSpec::with_median(KernelFamily::gaussian), s.y_rows())};
       }},
      {"rational_quadratic",
       [](const PairedSample& s) {
         return std::pair{
             resolve_bandwidth(KernelSpec::with_median(KernelFamily::rational_quadratic, 2.0), s.x_rows()),
             resolve_bandwidth(KernelSpec::with_median(KernelFamily::rational_quadratic, 2.0), s.y_rows())};
       }},
      {"distance_induced",
       [](const PairedSample& s) {
         const auto ax = s.x(0), ay = s.y(0);
         return std::pair{KernelSpec::distance(MetricSpec::euclidean(), {ax.begin(), ax.end()}),
                          KernelSpec::distance(MetricSpec::euclidean_power(1.5), {ay.begin(), ay.end()})};
       }},
  };
}

Verdict criterion_oracle() {
  Verdict v;
  RngStream rng(1001, 0);
  double worst_x = 0.0, worst_s = 0.0;
  std::size_t instances = 0;
  for (std::size_t n = 4; n <= 12; ++n) {
    for (const auto& fam : families()) {
      for (int rep = 0; rep < 50; ++rep) {
        const PairedSample s = oracle_instance(2 * n, rng);
        const auto [k, l] = fam.make(s);
        const SplitView split = make_split(s);
        const FastStatResult fast = studentize(gram_cross(k, l, s, split));
        const double naive_x = reference::xhsic_naive_pairwise(s, split, k, l);
        const auto naive_v = reference::sn2_naive(s, split, k, l);
        const bool ok_x = close(fast.xhsic, naive_x, 1e-10, 1e-12);
        const bool ok_s = close(fast.s_n2, naive_v.s_n2, 1e-10, 1e-12);
        auto rel = [](double a, double b) {
          return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
        };
        worst_x = std::max(worst_x, rel(fast.xhsic, naive_x));
        worst_s = std::max(worst_s, rel(fast.s_n2, naive_v.s_n2));
        if (!ok_x || !ok_s) {
          v.check(false, fam.name + " n=" + std::to_string(n) + " rep=" + std::to_string(rep));
        }
        ++instances;
      }
    }
  }
  v.detail << "instances=" << instances << " worst_rel_xhsic=" << worst_x << " worst_rel_sn2=" << worst_s;
  return v;
}

Verdict criterion_scaling() {
  Verdict v;
  const std::vector<std::size_t> sizes{500, 1000, 2000};
  const int reps = 9;
  std::vector<PairedSample> samples;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    RngStream rng(1002, i);
    samples.push_back(simlab::gen_independent_gaussian(2 * sizes[i], 10, rng));
  }
  const KernelSpec spec = KernelSpec::with_median(KernelFamily::gaussian);
  auto timed = [&](std::size_t i) {
    return studentized_xhsic(samples[i], make_split(samples[i]), spec, spec).elapsed_seconds;
  };
  for (std::size_t i = 0; i < sizes.size(); ++i) timed(i);  // warm-up, not recorded
  std::vector<std::vector<double>> times(sizes.size());
  for (int r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < sizes.size(); ++i) times[i].push_back(timed(i));
  }
  std::vector<double> medians;
  for (auto& t : times) {
    std::sort(t.begin(), t.end());
    medians.push_back(t[t.size() / 2]);
  }
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    const double ratio = medians[i] / medians[i - 1];
    v.detail << "ratio(" << sizes[i] << "/" << sizes[i - 1] << ")=" << ratio << " ";
    v.check(ratio < 5.5, "ratio at m=" + std::to_string(sizes[i - 1]));
  }
  v.detail << "median_seconds=" << medians[0] << "," << medians[1] << "," << medians[2];
  return v;
}

RowMatrix column(std::initializer_list<double> values) {
  RowMatrix m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double x : values) m(i++, 0) = x;
  return m;
}

Verdict criterion_unbiased() {
  Verdict v;
  struct Fixture {
    std::string name;
    reference::DiscreteJoint joint;
    KernelSpec k, l;
  };
  RowMatrix xs2(4, 2), ys2(4, 1);
  xs2 << 0, 0, 1, 0, 0, 1, 1, 1;
  ys2 << 0, 1, 1, 2;
  const std::vector<Fixture> fixtures{
      {"dependent_gaussian",
       reference::DiscreteJoint(column({0, 0, 1, 1, 2}), column({0, 1, 0, 1, 2}), {0.3, 0.1, 0.1, 0.3, 0.2}),
       KernelSpec::gaussian(0.7), KernelSpec::gaussian(1.3)},
      {"identity_linear", reference::DiscreteJoint(column({0, 1, 2}), column({0, 1, 2}), {0.5, 0.3, 0.2}),
       KernelSpec::linear(), KernelSpec::linear()},
      {"bivariate_rq", reference::DiscreteJoint(xs2, ys2, {0.4, 0.1, 0.2, 0.3}),
       KernelSpec::rational_quadratic(1.0, 1.5), KernelSpec::gaussian(0.5)},
  };
  const int reps = 20000;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const auto& fx = fixtures[f];
    const double target = reference::population_hsic_discrete(fx.joint, fx.k, fx.l);
    RngStream rng(1003, f);
    std::vector<double> values(reps);
    for (int r = 0; r < reps; ++r) values[static_cast<std::size_t>(r)] = reference::hsic_u_stat(fx.joint.draw(8, rng), fx.k, fx.l);
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / reps;
    double var = 0.0;
    for (double x : values) var += (x - mean) * (x - mean);
    const double se = std::sqrt(var / (reps - 1) / reps);
    const double z = (mean - target) / se;
    v.detail << fx.name << ": target=" << target << " mean=" << mean << " z=" << z << "; ";
    v.check(std::abs(z) < 3.0, fx.name);
  }
  return v;
}

simlab::ExperimentConfig base_config(simlab::Design design, std::uint64_t seed) {
  simlab::ExperimentConfig c;
  c.design = design;
  c.seed = seed;
  return c;
}

Verdict criterion_type1() {
  Verdict v;
  std::uint64_t seed = 1004;
  for (std::size_t d : {10, 100}) {
    for (auto family : {KernelFamily::gaussian, KernelFamily::rational_quadratic}) {
      auto c = base_config(simlab::Design::type1_curve, seed++);
      c.d = d;
      c.kernel = family;
      c.n_grid = {200};
      c.trials = 500;
      const auto r = simlab::run_experiment(c);
      const double rate = r.cells[0].failed ? -1.0 : r.cells[0].rejection_rate;
      v.detail << "d=" << d << " " << to_string(family) << " rate=" << rate << "; ";
      v.check(rate >= 0.03 && rate <= 0.07, "d=" + std::to_string(d) + " " + to_string(family));
    }
  }
  return v;
}

Verdict criterion_normality() {
  Verdict v;
  auto run_null = [](simlab::Marginal marginal, int dof, KernelFamily kernel, std::size_t n, std::uint64_t seed) {
    auto c = base_config(simlab::Design::null_distribution, seed);
    c.marginal = marginal;
    c.dof = dof;
    c.kernel = kernel;
    c.d = 10;
    c.n_grid = {n};
    c.trials = 500;
    const auto r = simlab::run_experiment(c);
    return r.cells[0].ks.value_or(1.0);
  };
  const double ks_t3 = run_null(simlab::Marginal::student_t, 3, KernelFamily::linear, 500, 1005);
  const double ks_gauss = run_null(simlab::Marginal::gaussian, 3, KernelFamily::gaussian, 200, 1006);
  const double ks_cauchy = run_null(simlab::Marginal::student_t, 1, KernelFamily::linear, 500, 1007);
  v.detail << "ks(t3,linear,N=500)=" << ks_t3 << " ks(gaussian,gaussian,N=200)=" << ks_gauss
           << " ks(t1,linear,N=500)=" << ks_cauchy;
  v.check(ks_t3 < 0.08, "t3 panel");
  v.check(ks_gauss < 0.08, "gaussian panel");
  v.check(ks_cauchy > 0.10, "dof=1 panel");
  return v;
}

Verdict criterion_power() {
  Verdict v;
  auto power = [](simlab::Method method, std::vector<std::size_t> grid, std::uint64_t seed,
                  PermutationStatistic statistic = PermutationStatistic::biased) {
    auto c = base_config(simlab::Design::power_curve, seed);
    c.method = method;
    c.perm_statistic = statistic;
    c.epsilon = 0.4;
    c.b = 2.0;
    c.d = 10;
    c.kernel = KernelFamily::gaussian;
    c.n_grid = std::move(grid);
    c.trials = 500;
    c.permutations = 150;
    const auto r = simlab::run_experiment(c);
    std::vector<double> out;
    for (const auto& cell : r.cells) out.push_back(cell.failed ? -1.0 : cell.rejection_rate);
    return out;
  };
  const std::vector<std::size_t> grid{100, 200, 400};
  // The verdict uses the classical biased-HSIC permutation test; the unbiased
  // variant is reported alongside.
  const auto perm = power(simlab::Method::perm_hsic, grid, 1008);
  const auto perm_unbiased = power(simlab::Method::perm_hsic, grid, 1008, PermutationStatistic::unbiased);
  const auto cross = power(simlab::Method::cross_hsic, {100, 200, 400, 800}, 1009);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    v.detail << "N=" << grid[i] << " perm=" << perm[i] << " perm(unbiased)=" << perm_unbiased[i]
             << " cross=" << cross[i] << " cross(2N)=" << cross[i + 1] << "; ";
    v.check(perm[i] >= cross[i] - 0.05, "ordering at N=" + std::to_string(grid[i]));
    v.check(std::abs(cross[i + 1] - perm[i]) <= 0.15, "gap at N=" + std::to_string(grid[i]));
  }
  return v;
}

Verdict criterion_poisson() {
  Verdict v;
  auto c = base_config(simlab::Design::poisson_example, 1010);
  c.lambda = 1.5;
  c.n_grid = {20000};  // per-half size 10^4
  c.trials = 2000;
  const auto r = simlab::run_experiment(c);
  const double target = simlab::poisson_sign_target(1.5);
  const double freq = r.cells[0].failed ? -1.0 : r.cells[0].rejection_rate;
  v.detail << "empirical=" << freq << " target=" << target << " degenerate=" << r.cells[0].degenerate_count;
  v.check(std::abs(freq - target) < 0.05, "distance to target");
  return v;
}

Verdict criterion_structural() {
  Verdict v;
  // Distance covariance is cross-HSIC with distance-induced kernels.
  std::size_t mismatches = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    RngStream rng(1011, t);
    const std::size_t rows = 20 + rng.uniform_index(200);
    const PairedSample s = oracle_instance(rows, rng);
    const std::size_t anchor = rng.uniform_index(rows);
    const auto mx = MetricSpec::euclidean();
    const auto my = MetricSpec::euclidean_power(0.5 + 1.5 * rng.uniform());
    const auto dcov = cross_dcov_test(s, mx, my, 0.05, anchor);
    const auto ax = s.x(anchor), ay = s.y(anchor);
    const auto hsic = cross_hsic_test(s, KernelSpec::distance(mx, {ax.begin(), ax.end()}),
                                      KernelSpec::distance(my, {ay.begin(), ay.end()}), 0.05);
    if (!(dcov.statistic == hsic.statistic && dcov.reject == hsic.reject &&
          dcov.diagnostics.at("s_n2") == hsic.diagnostics.at("s_n2"))) {
      ++mismatches;
    }
  }
  v.detail << "dcov_mismatches=" << mismatches << "/20";
  v.check(mismatches == 0, "dcov identity");

  // Linear kernels on univariate data reduce to the scalar factorisation.
  double worst_linear = 0.0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    RngStream rng(1012, t);
    const std::size_t rows = 6 + rng.uniform_index(400);
    PairedSample s = normal_sample(rows, 1, 1, rng);
    if (t % 2 == 0) {
      RowMatrix y = s.y_rows() + 0.7 * s.x_rows();
      s = PairedSample(s.x_rows(), y);
    }
    const SplitView split = make_split(s);
    const double general = studentized_xhsic(s, split, KernelSpec::linear(), KernelSpec::linear()).studentized;
    const double scalar = reference::linear_warmup_components(s, split).studentized(split.n);
    const double rel = std::abs(general - scalar) / std::max(std::abs(scalar), 1e-300);
    worst_linear = std::max(worst_linear, rel);
  }
  v.detail << " worst_rel_linear=" << worst_linear;
  v.check(worst_linear <= 1e-10, "linear factorisation");

  // Multiplying k and l by positive constants leaves the studentized statistic unchanged.
  double worst_scale = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    RngStream rng(1013, t);
    const PairedSample s = oracle_instance(20 + rng.uniform_index(200), rng);
    for (const auto& fam : families()) {
      const auto [k, l] = fam.make(s);
      GramBlocks blocks = gram_cross(k, l, s, make_split(s));
      const double base = studentize(blocks).studentized;
      const double a = std::exp(6.0 * rng.uniform() - 3.0), b = std::exp(6.0 * rng.uniform() - 3.0);
      blocks.k_cross *= a;
      blocks.l_cross *= b;
      const double scaled = studentize(blocks).studentized;
      worst_scale = std::max(worst_scale, std::abs(base - scaled) / std::max(std::abs(base), 1e-300));
    }
  }
  v.detail << " worst_rel_rescale=" << worst_scale;
  v.check(worst_scale <= 1e-10, "rescaling invariance");
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {1, "oracle equivalence of the quadratic path", criterion_oracle},
      {2, "quadratic scaling of the fast path", criterion_scaling},
      {3, "unbiasedness of the HSIC U-statistic", criterion_unbiased},
      {4, "null calibration at alpha=0.05", criterion_type1},
      {5, "null normality of the studentized statistic", criterion_normality},
      {6, "power ordering and sqrt(2) gap", criterion_power},
      {7, "Poisson limit of the sign event", criterion_poisson},
      {8, "structural identities", criterion_structural},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s | %s | %.1fs\n", v.pass ? "PASS" : "FAIL", c.id, c.name,
                v.detail.str().c_str(), seconds);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
