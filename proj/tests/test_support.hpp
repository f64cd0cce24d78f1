#pragma once

#include <string>
#include <vector>

#include "xindep/xindep.hpp"

namespace xindep::testing_support {

inline PairedSample random_sample(std::size_t rows, std::size_t dx, std::size_t dy, RngStream& rng) {
  RowMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dx));
  RowMatrix y(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dy));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.standard_normal();
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.standard_normal();
  return PairedSample(std::move(x), std::move(y));
}

/// Random sample where Y depends on X, so statistics are away from zero.
inline PairedSample dependent_sample(std::size_t rows, std::size_t dim, RngStream& rng) {
  RowMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  RowMatrix y(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x.data()[i] = rng.standard_normal();
    y.data()[i] = x.data()[i] * x.data()[i] + 0.5 * rng.standard_normal();
  }
  return PairedSample(std::move(x), std::move(y));
}

struct KernelPair {
  std::string name;
  KernelSpec k;
  KernelSpec l;
};

/// One kernel pair per family, with bandwidths fixed from the sample.
inline std::vector<KernelPair> kernel_families(const PairedSample& s) {
  const auto ax = s.x(0);
  const auto ay = s.y(0);
  return {
      {"linear", KernelSpec::linear(), KernelSpec::linear()},
      {"gaussian", resolve_bandwidth(KernelSpec::with_median(KernelFamily::gaussian), s.x_rows()),
       resolve_bandwidth(KernelSpec::with_median(KernelFamily::gaussian), s.y_rows())},
      {"rational_quadratic",
       resolve_bandwidth(KernelSpec::with_median(KernelFamily::rational_quadratic, 1.5), s.x_rows()),
       resolve_bandwidth(KernelSpec::with_median(KernelFamily::rational_quadratic, 1.5), s.y_rows())},
      {"distance_induced",
       KernelSpec::distance(MetricSpec::euclidean(), {ax.begin(), ax.end()}),
       KernelSpec::distance(MetricSpec::euclidean_power(1.5), {ay.begin(), ay.end()})},
  };
}

inline PairedSample univariate(const std::vector<double>& x, const std::vector<double>& y) {
  RowMatrix xm(static_cast<Eigen::Index>(x.size()), 1);
  RowMatrix ym(static_cast<Eigen::Index>(y.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xm(static_cast<Eigen::Index>(i), 0) = x[i];
    ym(static_cast<Eigen::Index>(i), 0) = y[i];
  }
  return PairedSample(std::move(xm), std::move(ym));
}

/// Relative closeness with an absolute floor for values near zero.
inline bool close(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

}  // namespace xindep::testing_support
