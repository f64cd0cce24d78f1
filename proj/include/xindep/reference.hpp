#pragma once

// Slow, literal implementations of every statistic. These are the oracles the
// quadratic-time code is checked against; none of them shares code with it
// beyond kernel_eval.

#include <cmath>
#include <cstddef>
#include <vector>

#include "xindep/core_data.hpp"
#include "xindep/errors.hpp"
#include "xindep/kernels.hpp"
#include "xindep/rng.hpp"

namespace xindep::reference {

/// Refuse O(n^4) evaluation above this per-half size unless overridden.
inline constexpr std::size_t kNaiveLimit = 64;

struct NaiveOptions {
  bool allow_large = false;
};

/// A joint distribution on finitely many (x, y) support points.
struct DiscreteJoint {
  RowMatrix x_support;
  RowMatrix y_support;
  std::vector<double> pmf;

  DiscreteJoint(RowMatrix xs, RowMatrix ys, std::vector<double> p)
      : x_support(std::move(xs)), y_support(std::move(ys)), pmf(std::move(p)) {
    require(x_support.rows() == y_support.rows() &&
                static_cast<std::size_t>(x_support.rows()) == pmf.size() && !pmf.empty(),
            "DiscreteJoint: support and pmf sizes differ");
    double total = 0.0;
    for (double p : pmf) {
      require(p >= 0.0, "DiscreteJoint: probabilities must be nonnegative");
      total += p;
    }
    require(std::abs(total - 1.0) <= 1e-12, "DiscreteJoint: probabilities must sum to 1");
    require(x_support.allFinite() && y_support.allFinite(), "DiscreteJoint: support must be finite");
  }

  [[nodiscard]] std::size_t atoms() const { return pmf.size(); }

  [[nodiscard]] PairedSample draw(std::size_t count, RngStream& rng) const {
    RowMatrix x(static_cast<Eigen::Index>(count), x_support.cols());
    RowMatrix y(static_cast<Eigen::Index>(count), y_support.cols());
    for (std::size_t r = 0; r < count; ++r) {
      const double u = rng.uniform();
      double cumulative = 0.0;
      std::size_t atom = atoms() - 1;
      for (std::size_t a = 0; a < atoms(); ++a) {
        cumulative += pmf[a];
        if (u < cumulative) {
          atom = a;
          break;
        }
      }
      x.row(static_cast<Eigen::Index>(r)) = x_support.row(static_cast<Eigen::Index>(atom));
      y.row(static_cast<Eigen::Index>(r)) = y_support.row(static_cast<Eigen::Index>(atom));
    }
    return PairedSample(std::move(x), std::move(y));
  }
};

namespace detail {

inline Point row_of(const RowMatrix& m, std::size_t i) {
  return {m.data() + i * static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.cols())};
}

// Dense cross tables evaluated entry by entry.
struct CrossValues {
  std::size_t n = 0;
  std::vector<double> k, l;  // row-major n x n, [i * n + t]

  CrossValues(const PairedSample& s, const SplitView& split, const KernelSpec& sk,
              const KernelSpec& sl)
      : n(split.n), k(n * n), l(n * n) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < n; ++t) {
        k[i * n + t] = kernel_eval(sk, s.x(split.first(i)), s.x(split.second(t)));
        l[i * n + t] = kernel_eval(sl, s.y(split.first(i)), s.y(split.second(t)));
      }
    }
  }
  [[nodiscard]] double kc(std::size_t i, std::size_t t) const { return k[i * n + t]; }
  [[nodiscard]] double lc(std::size_t i, std::size_t t) const { return l[i * n + t]; }

  /// <h_ij, h_tu> = 1/4 (k_it - k_iu - k_jt + k_ju)(l_it - l_iu - l_jt + l_ju), with i, j
  /// indexing the first half and t, u the second.
  [[nodiscard]] double inner_h(std::size_t i, std::size_t j, std::size_t t, std::size_t u) const {
    const double dk = kc(i, t) - kc(i, u) - kc(j, t) + kc(j, u);
    const double dl = lc(i, t) - lc(i, u) - lc(j, t) + lc(j, u);
    return 0.25 * dk * dl;
  }

  /// <h_ij, f_2> by averaging inner_h over ordered distinct second-half pairs.
  [[nodiscard]] double inner_h_f2(std::size_t i, std::size_t j) const {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t u = 0; u < n; ++u) {
        if (u != t) acc += inner_h(i, j, t, u);
      }
    }
    return acc / static_cast<double>(n * (n - 1));
  }
};

inline void guard(std::size_t n, const NaiveOptions& options) {
  if (n > kNaiveLimit && !options.allow_large) {
    throw ContractError("naive O(n^4) path refused for per-half size n = " + std::to_string(n) +
                        " > " + std::to_string(kNaiveLimit) + " (pass the override to force it)");
  }
}

}  // namespace detail

/// Three-term unbiased HSIC by explicit enumeration of distinct index tuples.
/// The third term uses k_ij l_il.
inline double hsic_u_stat_enumerated(const PairedSample& sample, const KernelSpec& spec_k,
                                     const KernelSpec& spec_l, NaiveOptions options = {}) {
  const std::size_t N = sample.size();
  require(N >= 4, "hsic_u_stat requires N >= 4");
  detail::guard(N, options);
  std::vector<double> k(N * N), l(N * N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      k[i * N + j] = kernel_eval(spec_k, sample.x(i), sample.x(j));
      l[i * N + j] = kernel_eval(spec_l, sample.y(i), sample.y(j));
    }
  }
  const auto Nd = static_cast<double>(N);
  double pair_sum = 0.0, triple_sum = 0.0, quad_sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      pair_sum += k[i * N + j] * l[i * N + j];
      for (std::size_t q = 0; q < N; ++q) {
        if (q == i || q == j) continue;
        triple_sum += k[i * N + j] * l[i * N + q];
        for (std::size_t m = 0; m < N; ++m) {
          if (m == i || m == j || m == q) continue;
          quad_sum += k[i * N + j] * l[q * N + m];
        }
      }
    }
  }
  const double n2 = Nd * (Nd - 1);
  const double n3 = n2 * (Nd - 2);
  const double n4 = n3 * (Nd - 3);
  return pair_sum / n2 + quad_sum / n4 - 2.0 * triple_sum / n3;
}

/// Unbiased HSIC from full Gram tables in O(N^2), using zero-diagonal tables:
/// [tr(KL) + 1'K1 1'L1 / ((N-1)(N-2)) - 2/(N-2) 1'KL1] / (N(N-3)).
/// Rows of `gram_x` are read through `order` (identity when empty), which is
/// how the permutation test relabels X without recomputing kernels.
inline double hsic_u_stat_gram(const Matrix& gram_x, const Matrix& gram_y,
                               const std::vector<std::size_t>& order = {}) {
  const auto N = static_cast<std::size_t>(gram_x.rows());
  require(N >= 4, "hsic_u_stat requires N >= 4");
  auto idx = [&](std::size_t i) { return order.empty() ? i : order[i]; };

  std::vector<double> row_k(N, 0.0), row_l(N, 0.0);
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t i = 0; i < N; ++i) {
      if (i == j) continue;
      row_k[j] += gram_x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      row_l[j] += gram_y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  double trace = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const auto pj = static_cast<Eigen::Index>(idx(j));
    for (std::size_t i = 0; i < N; ++i) {
      if (i == j) continue;
      trace += gram_x(static_cast<Eigen::Index>(idx(i)), pj) *
               gram_y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  double sum_k = 0.0, sum_l = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    sum_k += row_k[i];
    sum_l += row_l[i];
    cross += row_k[idx(i)] * row_l[i];
  }
  const auto Nd = static_cast<double>(N);
  return (trace + sum_k * sum_l / ((Nd - 1) * (Nd - 2)) - 2.0 / (Nd - 2) * cross) /
         (Nd * (Nd - 3));
}

inline double hsic_u_stat(const PairedSample& sample, const KernelSpec& spec_k,
                          const KernelSpec& spec_l) {
  require(sample.size() >= 4, "hsic_u_stat requires N >= 4");
  return hsic_u_stat_gram(gram_full(spec_k, sample.x_rows()), gram_full(spec_l, sample.y_rows()));
}

/// Biased (V-statistic) HSIC tr(K H L H) / N^2 with H = I - 11'/N, i.e.
/// [tr(KL) - (2/N) 1'KL1 + 1'K1 1'L1 / N^2] / N^2 on the full tables.
/// `order` relabels the rows of `gram_x` as in hsic_u_stat_gram.
inline double hsic_v_stat_gram(const Matrix& gram_x, const Matrix& gram_y,
                               const std::vector<std::size_t>& order = {}) {
  const auto N = static_cast<std::size_t>(gram_x.rows());
  require(N >= 2, "hsic_v_stat requires N >= 2");
  auto idx = [&](std::size_t i) { return order.empty() ? i : order[i]; };

  std::vector<double> row_k(N, 0.0), row_l(N, 0.0);
  double trace = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const auto pj = static_cast<Eigen::Index>(idx(j));
    for (std::size_t i = 0; i < N; ++i) {
      row_k[j] += gram_x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      row_l[j] += gram_y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      trace += gram_x(static_cast<Eigen::Index>(idx(i)), pj) *
               gram_y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  double sum_k = 0.0, sum_l = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    sum_k += row_k[i];
    sum_l += row_l[i];
    cross += row_k[idx(i)] * row_l[i];
  }
  const auto Nd = static_cast<double>(N);
  return (trace - 2.0 / Nd * cross + sum_k * sum_l / (Nd * Nd)) / (Nd * Nd);
}

/// Exact HSIC of a finite-support joint: E[k l] + E[k] E[l] - 2 E[mu(X) nu(Y)].
inline double population_hsic_discrete(const DiscreteJoint& joint, const KernelSpec& spec_k,
                                       const KernelSpec& spec_l) {
  const std::size_t m = joint.atoms();
  const auto& p = joint.pmf;
  double e_kl = 0.0, e_k = 0.0, e_l = 0.0, e_mu_nu = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    double mu = 0.0, nu = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      const double k = kernel_eval(spec_k, detail::row_of(joint.x_support, a),
                                   detail::row_of(joint.x_support, b));
      const double l = kernel_eval(spec_l, detail::row_of(joint.y_support, a),
                                   detail::row_of(joint.y_support, b));
      e_kl += p[a] * p[b] * k * l;
      e_k += p[a] * p[b] * k;
      e_l += p[a] * p[b] * l;
      mu += p[b] * k;
      nu += p[b] * l;
    }
    e_mu_nu += p[a] * mu * nu;
  }
  return e_kl + e_k * e_l - 2.0 * e_mu_nu;
}

struct NaiveCross {
  double xhsic = 0.0;
  double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
};

/// xHSIC = T1 - T2 - T3 + T4 with every term summed literally.
inline NaiveCross xhsic_naive(const PairedSample& sample, const SplitView& split,
                              const KernelSpec& spec_k, const KernelSpec& spec_l,
                              NaiveOptions options = {}) {
  const std::size_t n = split.n;
  require(n >= 2, "xhsic_naive requires n >= 2");
  detail::guard(n, options);
  const detail::CrossValues cv(sample, split, spec_k, spec_l);
  const auto nd = static_cast<double>(n);

  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < n; ++t) s1 += cv.kc(i, t) * cv.lc(i, t);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t u = 0; u < n; ++u) {
        if (u != t) s2 += cv.kc(i, t) * cv.lc(i, u);
      }
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) s3 += cv.kc(i, t) * cv.lc(j, t);
      }
    }
  }
  for (std::size_t i1 = 0; i1 < n; ++i1) {
    for (std::size_t i2 = 0; i2 < n; ++i2) {
      if (i2 == i1) continue;
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t u = 0; u < n; ++u) {
          if (u != t) s4 += cv.kc(i1, t) * cv.lc(i2, u);
        }
      }
    }
  }
  NaiveCross out;
  out.t1 = s1 / (nd * nd);
  out.t2 = s2 / (nd * nd * (nd - 1));
  out.t3 = s3 / (nd * nd * (nd - 1));
  out.t4 = s4 / (nd * nd * (nd - 1) * (nd - 1));
  out.xhsic = out.t1 - out.t2 - out.t3 + out.t4;
  return out;
}

/// xHSIC as the average of <h_ij, h_tu> over all ordered distinct pairs.
inline double xhsic_naive_pairwise(const PairedSample& sample, const SplitView& split,
                                   const KernelSpec& spec_k, const KernelSpec& spec_l,
                                   NaiveOptions options = {}) {
  const std::size_t n = split.n;
  require(n >= 2, "xhsic_naive requires n >= 2");
  detail::guard(n, options);
  const detail::CrossValues cv(sample, split, spec_k, spec_l);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t u = 0; u < n; ++u) {
          if (u != t) acc += cv.inner_h(i, j, t, u);
        }
      }
    }
  }
  const auto pairs = static_cast<double>(n * (n - 1));
  return acc / (pairs * pairs);
}

struct NaiveVariance {
  double s_n2 = 0.0;
  double xhsic = 0.0;
  std::vector<double> row_means;  // (1/(n-1)) sum_{j != i} <h_ij, f_2>
};

/// Jackknife variance s_n^2 = 4(n-1)/(n-2)^2 sum_i (row_mean_i - xHSIC)^2.
inline NaiveVariance sn2_naive(const PairedSample& sample, const SplitView& split,
                               const KernelSpec& spec_k, const KernelSpec& spec_l,
                               NaiveOptions options = {}) {
  const std::size_t n = split.n;
  require(n >= 3, "s_n^2 requires n >= 3");
  detail::guard(n, options);
  const detail::CrossValues cv(sample, split, spec_k, spec_l);
  const auto nd = static_cast<double>(n);

  NaiveVariance out;
  out.row_means.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row += cv.inner_h_f2(i, j);
    }
    out.row_means[i] = row / (nd - 1);
    total += row;
  }
  out.xhsic = total / (nd * (nd - 1));
  double squares = 0.0;
  for (double r : out.row_means) squares += (r - out.xhsic) * (r - out.xhsic);
  out.s_n2 = 4.0 * (nd - 1) / ((nd - 2) * (nd - 2)) * squares;
  return out;
}

/// Same quantity in the expanded form
/// 4(n-1)/(n-2)^2 [ (1/(n-1)^2) sum_i (sum_{j != i} <h_ij, f_2>)^2 - n xHSIC^2 ].
inline double sn2_naive_expanded(const PairedSample& sample, const SplitView& split,
                                 const KernelSpec& spec_k, const KernelSpec& spec_l,
                                 NaiveOptions options = {}) {
  const std::size_t n = split.n;
  require(n >= 3, "s_n^2 requires n >= 3");
  detail::guard(n, options);
  const detail::CrossValues cv(sample, split, spec_k, spec_l);
  const auto nd = static_cast<double>(n);
  const double x = xhsic_naive_pairwise(sample, split, spec_k, spec_l, options);
  double squares = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row += cv.inner_h_f2(i, j);
    }
    squares += row * row;
  }
  return 4.0 * (nd - 1) / ((nd - 2) * (nd - 2)) *
         (squares / ((nd - 1) * (nd - 1)) - nd * x * x);
}

/// Scalar factorisation for univariate data with linear kernels:
/// xHSIC = f1 * f2 and s_n^2 = f2^2 (I_n - II_n).
struct LinearWarmup {
  double f1 = 0.0;
  double f2 = 0.0;
  double i_n = 0.0;
  double ii_n = 0.0;

  /// sign(f2) sqrt(n) f1 / sqrt(I_n - II_n); NaN when the bracket is not positive.
  [[nodiscard]] double studentized(std::size_t n) const {
    const double bracket = i_n - ii_n;
    if (!(bracket > 0.0)) return std::nan("");
    const double sign = f2 > 0 ? 1.0 : (f2 < 0 ? -1.0 : 0.0);
    return sign * std::sqrt(static_cast<double>(n)) * f1 / std::sqrt(bracket);
  }
};

namespace detail {
// (1/n) sum X_i Y_i - (1/(n(n-1))) sum_{i != j} X_i Y_j over rows [offset, offset + n).
inline double linear_half_factor(const PairedSample& s, std::size_t offset, std::size_t n,
                                 double cx, double cy) {
  double sxy = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = offset; i < offset + n; ++i) {
    const double x = s.x(i)[0] - cx;
    const double y = s.y(i)[0] - cy;
    sxy += x * y;
    sx += x;
    sy += y;
  }
  const auto nd = static_cast<double>(n);
  return sxy / nd - (sx * sy - sxy) / (nd * (nd - 1));
}
}  // namespace detail

/// O(n) evaluation of the univariate linear-kernel decomposition. Inputs are
/// centred by per-half means first; the factors are location invariant.
inline LinearWarmup linear_warmup_components(const PairedSample& sample, const SplitView& split) {
  require(sample.dim_x() == 1 && sample.dim_y() == 1,
          "linear warmup decomposition needs univariate X and Y");
  const std::size_t n = split.n;
  require(n >= 3, "linear warmup decomposition requires n >= 3");
  const auto nd = static_cast<double>(n);

  auto half_mean = [&](std::size_t offset, bool want_x) {
    double acc = 0.0;
    for (std::size_t i = offset; i < offset + n; ++i) acc += want_x ? sample.x(i)[0] : sample.y(i)[0];
    return acc / nd;
  };
  const double mx1 = half_mean(0, true), my1 = half_mean(0, false);
  const double mx2 = half_mean(n, true), my2 = half_mean(n, false);

  LinearWarmup out;
  out.f1 = detail::linear_half_factor(sample, 0, n, mx1, my1);
  out.f2 = detail::linear_half_factor(sample, n, n, mx2, my2);

  // sum_{j} (X_i - X_j)(Y_i - Y_j) = n x_i y_i - x_i Sy - y_i Sx + Sxy on centred rows.
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sample.x(i)[0] - mx1, y = sample.y(i)[0] - my1;
    sx += x;
    sy += y;
    sxy += x * y;
  }
  double squares = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sample.x(i)[0] - mx1, y = sample.y(i)[0] - my1;
    const double c = nd * x * y - x * sy - y * sx + sxy;
    squares += c * c;
  }
  out.i_n = squares / ((nd - 1) * (nd - 2) * (nd - 2));
  out.ii_n = 4.0 * nd * (nd - 1) / ((nd - 2) * (nd - 2)) * out.f1 * out.f1;
  return out;
}

}  // namespace xindep::reference
