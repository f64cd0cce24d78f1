#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace xindep {

/// Neumaier's variant of Kahan summation. Order-dependent but deterministic.
class CompensatedSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if ((sum_ >= 0 ? sum_ : -sum_) >= (value >= 0 ? value : -value)) {
      carry_ += (sum_ - t) + value;
    } else {
      carry_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double value) {
    add(value);
    return *this;
  }
  [[nodiscard]] double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

namespace detail {
inline double pairwise_sum_impl(const double* data, std::size_t count) {
  constexpr std::size_t kLeaf = 32;
  if (count <= kLeaf) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < count; ++i) acc.add(data[i]);
    return acc.value();
  }
  const std::size_t half = count / 2;
  return pairwise_sum_impl(data, half) +
         pairwise_sum_impl(data + half, count - half);
}
}  // namespace detail

/// Pairwise tree reduction with compensated leaves. The tree shape depends
/// only on the length, so the result is independent of how rows were produced.
inline double pairwise_sum(std::span<const double> values) {
  return detail::pairwise_sum_impl(values.data(), values.size());
}

inline double pairwise_sum(const std::vector<double>& values) {
  return pairwise_sum(std::span<const double>(values));
}

/// Compensated dot product of two equally sized sequences.
inline double compensated_dot(std::span<const double> a,
                              std::span<const double> b) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc.add(a[i] * b[i]);
  return acc.value();
}

}  // namespace xindep
