#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "xindep/core_data.hpp"
#include "xindep/errors.hpp"

namespace xindep {

struct MetricSpec {
  enum class Family { euclidean, euclidean_power };

  Family family = Family::euclidean;
  double q = 1.0;             // exponent for euclidean_power, in (0, 2]
  std::size_t dimension = 0;  // 0 accepts any dimension

  static MetricSpec euclidean(std::size_t dim = 0) { return {Family::euclidean, 1.0, dim}; }
  static MetricSpec euclidean_power(double q, std::size_t dim = 0) {
    return {Family::euclidean_power, q, dim};
  }

  void validate() const {
    if (family == Family::euclidean_power) {
      require(q > 0.0 && q <= 2.0, "metric exponent q must lie in (0, 2]");
    }
  }
};

enum class KernelFamily { linear, gaussian, rational_quadratic, distance_induced };
enum class BandwidthPolicy { explicit_scale, median_heuristic };

/// Selects between the distance kernel with a factor 2 on the cross distance,
/// 1/2 (rho(x,x0) + rho(x',x0) - 2 rho(x,x')), and the classical form with
/// factor 1. Inside the cross statistic the anchor terms cancel and the two
/// differ by a constant factor, so the studentized statistic is the same.
enum class DistanceVariant { doubled, classical };

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double scale = 1.0;     // c in exp(-c |x-x'|^2) and the RQ kernel
  double rq_alpha = 1.0;
  MetricSpec metric{};
  std::vector<double> anchor;
  BandwidthPolicy bandwidth = BandwidthPolicy::explicit_scale;
  DistanceVariant variant = DistanceVariant::doubled;

  static KernelSpec linear() {
    KernelSpec s;
    s.family = KernelFamily::linear;
    return s;
  }
  static KernelSpec gaussian(double c) {
    KernelSpec s;
    s.family = KernelFamily::gaussian;
    s.scale = c;
    return s;
  }
  static KernelSpec rational_quadratic(double c, double alpha = 1.0) {
    KernelSpec s;
    s.family = KernelFamily::rational_quadratic;
    s.scale = c;
    s.rq_alpha = alpha;
    return s;
  }
  /// Bandwidth left to the median heuristic; resolve before evaluating.
  static KernelSpec with_median(KernelFamily family, double alpha = 1.0) {
    KernelSpec s;
    s.family = family;
    s.rq_alpha = alpha;
    s.bandwidth = BandwidthPolicy::median_heuristic;
    return s;
  }
  static KernelSpec distance(MetricSpec metric, std::vector<double> anchor,
                             DistanceVariant variant = DistanceVariant::doubled) {
    KernelSpec s;
    s.family = KernelFamily::distance_induced;
    s.metric = metric;
    s.anchor = std::move(anchor);
    s.variant = variant;
    return s;
  }

  [[nodiscard]] bool needs_scale() const {
    return family == KernelFamily::gaussian || family == KernelFamily::rational_quadratic;
  }

  void validate() const {
    if (needs_scale()) {
      if (bandwidth == BandwidthPolicy::explicit_scale) {
        require(scale > 0.0 && std::isfinite(scale), "kernel scale c must be positive");
      }
      require(rq_alpha > 0.0, "rational-quadratic alpha must be positive");
    }
    if (family == KernelFamily::distance_induced) {
      metric.validate();
      require(!anchor.empty(), "distance-induced kernel needs an anchor point");
      require(metric.dimension == 0 || metric.dimension == anchor.size(),
              "anchor dimension does not match the metric dimension");
    }
  }
};

inline std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::linear: return "linear";
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::rational_quadratic: return "rational_quadratic";
    case KernelFamily::distance_induced: return "distance_induced";
  }
  return "unknown";
}

inline double squared_distance(Point u, Point v) {
  double acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double diff = u[j] - v[j];
    acc += diff * diff;
  }
  return acc;
}

inline double metric_distance(const MetricSpec& metric, Point u, Point v) {
  require(u.size() == v.size(), "metric: dimension mismatch");
  require(metric.dimension == 0 || metric.dimension == u.size(), "metric: dimension mismatch");
  const double sq = squared_distance(u, v);
  switch (metric.family) {
    case MetricSpec::Family::euclidean: return std::sqrt(sq);
    case MetricSpec::Family::euclidean_power: return std::pow(sq, 0.5 * metric.q);
  }
  return 0.0;
}

inline double distance_kernel_eval(const MetricSpec& metric, Point anchor, Point u, Point v,
                                   DistanceVariant variant = DistanceVariant::doubled) {
  require(anchor.size() == u.size() && u.size() == v.size(),
          "distance kernel: dimension mismatch between anchor and points");
  const double cross_weight = variant == DistanceVariant::doubled ? 2.0 : 1.0;
  return 0.5 * (metric_distance(metric, u, anchor) + metric_distance(metric, v, anchor) -
                cross_weight * metric_distance(metric, u, v));
}

inline double kernel_eval(const KernelSpec& spec, Point u, Point v) {
  if (u.size() != v.size()) {
    throw ContractError("kernel_eval: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
  }
  switch (spec.family) {
    case KernelFamily::linear: {
      double acc = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) acc += u[j] * v[j];
      return acc;
    }
    case KernelFamily::gaussian:
      require(spec.bandwidth == BandwidthPolicy::explicit_scale,
              "kernel_eval: median-heuristic bandwidth has not been resolved");
      return std::exp(-spec.scale * squared_distance(u, v));
    case KernelFamily::rational_quadratic:
      require(spec.bandwidth == BandwidthPolicy::explicit_scale,
              "kernel_eval: median-heuristic bandwidth has not been resolved");
      return std::pow(1.0 + spec.scale * squared_distance(u, v) / (2.0 * spec.rq_alpha),
                      -spec.rq_alpha);
    case KernelFamily::distance_induced:
      return distance_kernel_eval(spec.metric, spec.anchor, u, v, spec.variant);
  }
  return 0.0;
}

/// c = 1 / (2m), m the median squared distance over distinct index pairs.
inline double median_heuristic(const RowMatrix& points) {
  const auto count = static_cast<std::size_t>(points.rows());
  require(count >= 2, "median heuristic needs at least two points");
  const auto dim = static_cast<std::size_t>(points.cols());
  std::vector<double> sq;
  sq.reserve(count * (count - 1) / 2);
  for (std::size_t i = 0; i < count; ++i) {
    const Point u(points.data() + i * dim, dim);
    for (std::size_t j = i + 1; j < count; ++j) {
      sq.push_back(squared_distance(u, Point(points.data() + j * dim, dim)));
    }
  }
  const std::size_t mid = sq.size() / 2;
  std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid), sq.end());
  double median = sq[mid];
  if (sq.size() % 2 == 0) {
    const double lower = *std::max_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  if (!(median > 0.0)) {
    throw ContractError("degenerate bandwidth: median pairwise squared distance is zero");
  }
  return 1.0 / (2.0 * median);
}

/// Replaces a median-heuristic bandwidth by its value on the given rows.
inline KernelSpec resolve_bandwidth(KernelSpec spec, const RowMatrix& points) {
  if (spec.needs_scale() && spec.bandwidth == BandwidthPolicy::median_heuristic) {
    spec.scale = median_heuristic(points);
    spec.bandwidth = BandwidthPolicy::explicit_scale;
  }
  spec.validate();
  return spec;
}

/// Kernel tables for a split sample. Cross blocks are always present; the
/// within-half blocks are only filled by build_within_half().
struct GramBlocks {
  std::size_t n = 0;
  Matrix k_cross;  // k(X_i, X_{n+t})
  Matrix l_cross;  // l(Y_i, Y_{n+t})
  std::optional<Matrix> k_first, l_first, k_second, l_second;

  [[nodiscard]] bool has_within_half() const { return k_first.has_value(); }
};

namespace detail {
inline void check_point_dims(const KernelSpec& spec, std::size_t dim) {
  if (spec.family == KernelFamily::distance_induced) {
    require(spec.anchor.size() == dim, "distance kernel: anchor dimension does not match data");
  }
}

inline Matrix cross_table(const KernelSpec& spec, const RowMatrix& rows, std::size_t n) {
  const auto dim = static_cast<std::size_t>(rows.cols());
  check_point_dims(spec, dim);
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double* base = rows.data();
  for (std::size_t t = 0; t < n; ++t) {
    const Point v(base + (n + t) * dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
          kernel_eval(spec, Point(base + i * dim, dim), v);
    }
  }
  return out;
}

inline Matrix within_table(const KernelSpec& spec, const RowMatrix& rows, std::size_t offset,
                           std::size_t count) {
  const auto dim = static_cast<std::size_t>(rows.cols());
  check_point_dims(spec, dim);
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
  const double* base = rows.data();
  for (std::size_t i = 0; i < count; ++i) {
    const Point u(base + (offset + i) * dim, dim);
    for (std::size_t j = i; j < count; ++j) {
      const double value = kernel_eval(spec, u, Point(base + (offset + j) * dim, dim));
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = value;
    }
  }
  return out;
}
}  // namespace detail

inline GramBlocks gram_cross(const KernelSpec& spec_k, const KernelSpec& spec_l,
                             const PairedSample& sample, const SplitView& split) {
  require(2 * split.n <= sample.size(), "gram_cross: split does not fit the sample");
  spec_k.validate();
  spec_l.validate();
  GramBlocks blocks;
  blocks.n = split.n;
  blocks.k_cross = detail::cross_table(spec_k, sample.x_rows(), split.n);
  blocks.l_cross = detail::cross_table(spec_l, sample.y_rows(), split.n);
  return blocks;
}

inline void build_within_half(GramBlocks& blocks, const KernelSpec& spec_k,
                              const KernelSpec& spec_l, const PairedSample& sample) {
  const std::size_t n = blocks.n;
  blocks.k_first = detail::within_table(spec_k, sample.x_rows(), 0, n);
  blocks.l_first = detail::within_table(spec_l, sample.y_rows(), 0, n);
  blocks.k_second = detail::within_table(spec_k, sample.x_rows(), n, n);
  blocks.l_second = detail::within_table(spec_l, sample.y_rows(), n, n);
}

/// Full symmetric Gram table over all rows.
inline Matrix gram_full(const KernelSpec& spec, const RowMatrix& rows) {
  spec.validate();
  return detail::within_table(spec, rows, 0, static_cast<std::size_t>(rows.rows()));
}

}  // namespace xindep
