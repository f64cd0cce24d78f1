#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "xindep/core_data.hpp"
#include "xindep/csv.hpp"
#include "xindep/errors.hpp"
#include "xindep/fast_xhsic.hpp"
#include "xindep/kernels.hpp"
#include "xindep/parallel.hpp"
#include "xindep/reference.hpp"
#include "xindep/rng.hpp"

namespace xindep {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Upper tail 1 - Phi(x), accurate for large positive x.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Inverse standard-normal CDF (Wichura's AS 241, PPND16; ~1e-16 relative).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ContractError("normal_quantile: p must lie in (0, 1), got " + std::to_string(p));
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value = 0.0;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                  0.24178072517745061177) * r + 1.27045825245236838258) * r +
                3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                  0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                  0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                  1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -value : value;
}

inline void require_alpha(double alpha) {
  require(alpha > 0.0 && alpha < 1.0,
          "alpha must satisfy α ∈ (0,1), got " + format_double(alpha));
}

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}
}  // namespace detail

/// Permutation-free test: reject when sqrt(n) xHSIC / s_n > z_{1-alpha}.
/// A degenerate variance yields a non-rejection with diagnostic
/// degenerate_variance = 1 and no p-value.
inline TestOutcome cross_hsic_test(const PairedSample& sample, const KernelSpec& spec_k,
                                   const KernelSpec& spec_l, double alpha) {
  require_alpha(alpha);
  const auto start = std::chrono::steady_clock::now();
  const SplitView split = make_split(sample);
  const FastStatResult stat = studentized_xhsic(sample, split, spec_k, spec_l);

  TestOutcome out;
  out.threshold = normal_quantile(1.0 - alpha);
  out.statistic = stat.studentized;
  out.reject = !stat.degenerate && out.statistic > out.threshold;
  if (!stat.degenerate) out.p_value = normal_sf(out.statistic);
  out.diagnostics["xhsic"] = stat.xhsic;
  out.diagnostics["s_n2"] = stat.s_n2;
  out.diagnostics["n"] = static_cast<double>(split.n);
  out.diagnostics["dropped"] = static_cast<double>(split.dropped);
  out.diagnostics["degenerate_variance"] = stat.degenerate ? 1.0 : 0.0;
  out.elapsed_seconds = detail::seconds_since(start);
  return out;
}

/// Studentized cross distance covariance: the cross-HSIC pipeline with
/// distance-induced kernels anchored at observation `anchor_index`.
inline TestOutcome cross_dcov_test(const PairedSample& sample, const MetricSpec& metric_x,
                                   const MetricSpec& metric_y, double alpha,
                                   std::size_t anchor_index = 0,
                                   DistanceVariant variant = DistanceVariant::doubled) {
  require_alpha(alpha);
  require(anchor_index < sample.size(), "cross_dcov_test: anchor index outside the sample");
  const auto ax = sample.x(anchor_index);
  const auto ay = sample.y(anchor_index);
  const KernelSpec k = KernelSpec::distance(metric_x, {ax.begin(), ax.end()}, variant);
  const KernelSpec l = KernelSpec::distance(metric_y, {ay.begin(), ay.end()}, variant);
  TestOutcome out = cross_hsic_test(sample, k, l, alpha);
  out.diagnostics["anchor_index"] = static_cast<double>(anchor_index);
  return out;
}

/// Statistic recomputed by the permutation test.
enum class PermutationStatistic { unbiased, biased };

inline std::string to_string(PermutationStatistic s) {
  return s == PermutationStatistic::unbiased ? "unbiased" : "biased";
}

/// HSIC permutation test with add-one p-value (1 + #{T_b >= T_0}) / (B + 1).
/// The Gram tables are built once and X is relabelled through an index map.
/// Replicate b draws from rng.child(b).
inline TestOutcome permutation_hsic_test(const PairedSample& sample, const KernelSpec& spec_k,
                                         const KernelSpec& spec_l, double alpha,
                                         std::size_t permutations, const RngStream& rng,
                                         std::size_t threads = 1,
                                         PermutationStatistic statistic = PermutationStatistic::unbiased) {
  require_alpha(alpha);
  require(sample.size() >= 4, "insufficient sample: permutation HSIC requires N >= 4, got N = " +
                                  std::to_string(sample.size()));
  require(permutations >= 1, "permutation count B must be at least 1");
  const auto start = std::chrono::steady_clock::now();

  const KernelSpec k = resolve_bandwidth(spec_k, sample.x_rows());
  const KernelSpec l = resolve_bandwidth(spec_l, sample.y_rows());
  const Matrix gram_x = gram_full(k, sample.x_rows());
  const Matrix gram_y = gram_full(l, sample.y_rows());

  auto evaluate = [&](const std::vector<std::size_t>& order) {
    return statistic == PermutationStatistic::unbiased ? reference::hsic_u_stat_gram(gram_x, gram_y, order)
                                                       : reference::hsic_v_stat_gram(gram_x, gram_y, order);
  };
  const double observed = evaluate({});
  std::vector<double> replicates(permutations);
  parallel_for(permutations, threads, [&](std::size_t b) {
    RngStream stream = rng.child(b);
    replicates[b] = evaluate(stream.permutation(sample.size()));
  });

  // Replicates equal to the observed value up to summation-order rounding
  // count as ties (and ties count against rejection).
  const double scale = gram_x.cwiseAbs().maxCoeff() * gram_y.cwiseAbs().maxCoeff();
  const double tie = 1e-12 * std::max(std::abs(observed), scale);
  std::size_t at_least = 0;
  for (double value : replicates) {
    if (value >= observed - tie) ++at_least;
  }

  TestOutcome out;
  out.statistic = observed;
  out.p_value = static_cast<double>(1 + at_least) / static_cast<double>(permutations + 1);
  out.reject = *out.p_value <= alpha;
  // No quantile threshold; the decision is p_value <= alpha.
  out.threshold = std::numeric_limits<double>::quiet_NaN();
  out.diagnostics["permutations"] = static_cast<double>(permutations);
  out.diagnostics["exceedances"] = static_cast<double>(at_least);
  out.diagnostics["n"] = static_cast<double>(sample.size());
  out.diagnostics["biased_statistic"] = statistic == PermutationStatistic::biased ? 1.0 : 0.0;
  out.elapsed_seconds = detail::seconds_since(start);
  return out;
}

}  // namespace xindep
