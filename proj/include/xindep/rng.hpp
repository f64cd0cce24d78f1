#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace xindep {

namespace detail {
// SplitMix64 finalizer; used only to derive child stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// A reproducible random stream identified by (seed, stream_id).
///
/// The engine is a Mersenne twister keyed through std::seed_seq on all four
/// 32-bit halves of (seed, stream_id); both are fully specified by the
/// standard, so sequences are identical across platforms. All variate
/// transforms below are written out explicitly for the same reason (the
/// standard <random> distributions are implementation-defined).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const { return stream_id_; }

  /// Independent stream derived from this one's identity (not its state).
  [[nodiscard]] RngStream child(std::uint64_t key) const {
    return RngStream(seed_, detail::mix64(stream_id_ ^ detail::mix64(key + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), rejection-sampled without modulo bias.
  std::uint64_t uniform_index(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return draw % bound;
  }

  /// Standard normal via the Marsaglia polar method.
  double standard_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

  /// Chi-squared with an integer number of degrees of freedom.
  double chi_squared(int dof) {
    double total = 0.0;
    for (int i = 0; i < dof; ++i) {
      const double z = standard_normal();
      total += z * z;
    }
    return total;
  }

  /// Student t as Z / sqrt(V / dof).
  double student_t(int dof) {
    const double z = standard_normal();
    const double v = chi_squared(dof);
    return z / std::sqrt(v / static_cast<double>(dof));
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniformly random permutation of {0, ..., count-1} (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t count) {
    std::vector<std::size_t> perm(count);
    for (std::size_t i = 0; i < count; ++i) perm[i] = i;
    for (std::size_t i = count; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(perm[i - 1], perm[j]);
    }
    return perm;
  }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    return std::mt19937_64(seq);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<double> rng_draw_standard_normal(RngStream stream, std::size_t count) {
  std::vector<double> out(count);
  for (auto& value : out) value = stream.standard_normal();
  return out;
}

}  // namespace xindep
