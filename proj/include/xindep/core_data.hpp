#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "xindep/errors.hpp"

namespace xindep {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Point = std::span<const double>;

/// n paired observations (X_i, Y_i), X_i in R^d1 and Y_i in R^d2, one per row.
class PairedSample {
 public:
  PairedSample() = default;

  PairedSample(RowMatrix x, RowMatrix y) : x_(std::move(x)), y_(std::move(y)) {
    require(x_.rows() == y_.rows(), "PairedSample: x and y must have the same number of rows");
    require(x_.rows() >= 1, "PairedSample: at least one observation is required");
    require(x_.cols() >= 1 && y_.cols() >= 1, "PairedSample: dimensions must be positive");
    require(x_.allFinite() && y_.allFinite(), "PairedSample: all entries must be finite");
  }

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  [[nodiscard]] std::size_t dim_x() const { return static_cast<std::size_t>(x_.cols()); }
  [[nodiscard]] std::size_t dim_y() const { return static_cast<std::size_t>(y_.cols()); }

  [[nodiscard]] Point x(std::size_t i) const {
    return {x_.data() + i * dim_x(), dim_x()};
  }
  [[nodiscard]] Point y(std::size_t i) const {
    return {y_.data() + i * dim_y(), dim_y()};
  }

  [[nodiscard]] const RowMatrix& x_rows() const { return x_; }
  [[nodiscard]] const RowMatrix& y_rows() const { return y_; }

  /// Same pairs, with the X and Y roles exchanged.
  [[nodiscard]] PairedSample swapped() const { return PairedSample(y_, x_); }

 private:
  RowMatrix x_;
  RowMatrix y_;
};

/// The two equal halves [0, n) and [n, 2n) of a sample.
struct SplitView {
  std::size_t n = 0;
  std::size_t dropped = 0;  // trailing observations excluded (0 or 1)

  [[nodiscard]] std::size_t first(std::size_t i) const { return i; }
  [[nodiscard]] std::size_t second(std::size_t t) const { return n + t; }
};

inline SplitView make_split(const PairedSample& sample) {
  const std::size_t total = sample.size();
  if (total < 6) {
    throw ContractError("insufficient sample: splitting requires N >= 6, got N = " +
                        std::to_string(total));
  }
  SplitView split;
  split.n = total / 2;
  split.dropped = total - 2 * split.n;
  return split;
}

/// Applies a permutation to the rows of a sample (pairs stay intact).
inline PairedSample permute_rows(const PairedSample& sample, std::span<const std::size_t> order) {
  RowMatrix x(static_cast<Eigen::Index>(order.size()), sample.x_rows().cols());
  RowMatrix y(static_cast<Eigen::Index>(order.size()), sample.y_rows().cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = sample.x_rows().row(static_cast<Eigen::Index>(order[i]));
    y.row(static_cast<Eigen::Index>(i)) = sample.y_rows().row(static_cast<Eigen::Index>(order[i]));
  }
  return PairedSample(std::move(x), std::move(y));
}

struct TestOutcome {
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;
  std::optional<double> p_value;
  double elapsed_seconds = 0.0;
  std::map<std::string, double> diagnostics;
};

}  // namespace xindep
