#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "xindep/accumulate.hpp"
#include "xindep/core_data.hpp"
#include "xindep/errors.hpp"
#include "xindep/kernels.hpp"

namespace xindep {

struct CrossStatistic {
  double xhsic = 0.0;
  double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
};

struct VarianceEstimate {
  double s_n2 = 0.0;
  std::vector<double> w;  // per-row jackknife contributions
  // s_n^2 at or below this is indistinguishable from rounding in w.
  double degeneracy_floor = 0.0;
};

struct FastStatResult {
  double xhsic = 0.0;
  double s_n2 = 0.0;
  double studentized = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;
  double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
  std::vector<double> w;
  std::size_t n = 0;
  double elapsed_seconds = 0.0;
};

namespace detail {

// Reductions over an n x n column-major table. Columns are contiguous, so each
// pass walks memory linearly and keeps one compensated accumulator per row.
struct BlockSums {
  std::vector<double> row;  // sum over t, indexed by first-half i
  std::vector<double> col;  // sum over i, indexed by second-half t
  double total = 0.0;
};

inline BlockSums block_sums(const Matrix& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  std::vector<CompensatedSum> rows(n);
  BlockSums out;
  out.col.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double* column = m.data() + t * n;
    CompensatedSum c;
    for (std::size_t i = 0; i < n; ++i) {
      rows[i].add(column[i]);
      c.add(column[i]);
    }
    out.col[t] = c.value();
  }
  out.row.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.row[i] = rows[i].value();
  out.total = pairwise_sum(out.row);
  return out;
}

// (m v)_i with compensated accumulation.
inline std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
  const auto n = static_cast<std::size_t>(m.rows());
  std::vector<CompensatedSum> acc(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double* column = m.data() + t * n;
    const double vt = v[t];
    for (std::size_t i = 0; i < n; ++i) acc[i].add(column[i] * vt);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = acc[i].value();
  return out;
}

// Row sums of the elementwise product a o b.
inline std::vector<double> hadamard_row_sums(const Matrix& a, const Matrix& b) {
  const auto n = static_cast<std::size_t>(a.rows());
  std::vector<CompensatedSum> acc(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double* ca = a.data() + t * n;
    const double* cb = b.data() + t * n;
    for (std::size_t i = 0; i < n; ++i) acc[i].add(ca[i] * cb[i]);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = acc[i].value();
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
  return pairwise_sum(prod);
}

// Everything the numerator and the variance share.
struct CrossMoments {
  BlockSums k, l;
  std::vector<double> diag;  // sum_t K_it L_it
  double s0 = 0.0;           // sum K o L
  double r = 0.0;            // sum_i rowK_i rowL_i   (first-half index shared)
  double c = 0.0;            // sum_t colK_t colL_t   (second-half index shared)
};

inline CrossMoments cross_moments(const GramBlocks& blocks) {
  CrossMoments m;
  m.k = block_sums(blocks.k_cross);
  m.l = block_sums(blocks.l_cross);
  m.diag = hadamard_row_sums(blocks.k_cross, blocks.l_cross);
  m.s0 = pairwise_sum(m.diag);
  m.r = dot(m.k.row, m.l.row);
  m.c = dot(m.k.col, m.l.col);
  return m;
}

inline CrossStatistic cross_from_moments(const CrossMoments& m, std::size_t n) {
  const auto nd = static_cast<double>(n);
  CrossStatistic out;
  // T1: pairs sharing both indices; T2/T3: one shared index; T4: none shared.
  out.t1 = m.s0 / (nd * nd);
  out.t2 = (m.r - m.s0) / (nd * nd * (nd - 1));
  out.t3 = (m.c - m.s0) / (nd * nd * (nd - 1));
  out.t4 = (m.k.total * m.l.total - m.r - m.c + m.s0) / (nd * nd * (nd - 1) * (nd - 1));
  // Equivalent to T1 - T2 - T3 + T4 with the common factor pulled out, which
  // avoids cancelling four terms of similar size.
  out.xhsic = (m.s0 - (m.r + m.c) / nd + m.k.total * m.l.total / (nd * nd)) /
              ((nd - 1) * (nd - 1));
  return out;
}

}  // namespace detail

/// Quadratic-time xHSIC from the cross blocks.
inline CrossStatistic xhsic_fast(const GramBlocks& blocks, std::size_t n) {
  require(n >= 2, "xhsic_fast requires n >= 2");
  require(static_cast<std::size_t>(blocks.k_cross.rows()) == n, "xhsic_fast: block size mismatch");
  return detail::cross_from_moments(detail::cross_moments(blocks), n);
}

namespace detail {

// With A = K_cross, B = L_cross and G_ab = <phi(X_a) (x) psi(Y_b), f_2>,
//   (n-1) G_ab = (A B')_ab - rowA_a rowB_b / n,
// and sum_{j != i} <h_ij, f_2> = (n G_ii + tr G - (G 1)_i - (G' 1)_i) / 2 with
//   (n-1) (G 1)_i  = (A colB)_i - rowA_i sum(B) / n,
//   (n-1) (G' 1)_i = (B colA)_i - rowB_i sum(A) / n,
//   (n-1) tr G     = sum(A o B) - rowA . rowB / n.
// Then w_i = sum_{j != i} <h_ij, f_2> / (n-1), whose mean is xHSIC.
inline VarianceEstimate variance_from_moments(const GramBlocks& blocks, const CrossMoments& m,
                                              std::size_t n, double xhsic) {
  const auto nd = static_cast<double>(n);
  const std::vector<double> a_colb = mat_vec(blocks.k_cross, m.l.col);
  const std::vector<double> b_cola = mat_vec(blocks.l_cross, m.k.col);
  const double trace_g = (m.s0 - m.r / nd) / (nd - 1);

  VarianceEstimate out;
  const double trace_mag = (std::abs(m.s0) + std::abs(m.r) / nd) / (nd - 1);

  out.w.resize(n);
  std::vector<double> centered_sq(n), magnitude_sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g_ii = (m.diag[i] - m.k.row[i] * m.l.row[i] / nd) / (nd - 1);
    const double g_row = (a_colb[i] - m.k.row[i] * m.l.total / nd) / (nd - 1);
    const double g_col = (b_cola[i] - m.l.row[i] * m.k.total / nd) / (nd - 1);
    out.w[i] = (nd * g_ii + trace_g - g_row - g_col) / (2.0 * (nd - 1));
    const double dev = out.w[i] - xhsic;
    centered_sq[i] = dev * dev;
    // Size of the terms that cancel into w_i; rounding in w_i is a small multiple
    // of eps times this.
    const double mag =
        (nd * (std::abs(m.diag[i]) + std::abs(m.k.row[i] * m.l.row[i]) / nd) / (nd - 1) + trace_mag +
         (std::abs(a_colb[i]) + std::abs(m.k.row[i] * m.l.total) / nd) / (nd - 1) +
         (std::abs(b_cola[i]) + std::abs(m.l.row[i] * m.k.total) / nd) / (nd - 1)) /
        (2.0 * (nd - 1));
    magnitude_sq[i] = mag * mag;
  }
  // sum_i (w_i - xHSIC)^2 equals sum_i w_i^2 - n xHSIC^2 because mean(w) = xHSIC;
  // the centred form cannot go negative.
  const double factor = 4.0 * (nd - 1) / ((nd - 2) * (nd - 2));
  out.s_n2 = factor * pairwise_sum(centered_sq);
  constexpr double kRelativeFloor = 1e-10;
  out.degeneracy_floor = factor * kRelativeFloor * kRelativeFloor * pairwise_sum(magnitude_sq);
  return out;
}

}  // namespace detail

/// Quadratic-time jackknife variance s_n^2 and the row contributions w.
inline VarianceEstimate sn2_fast(const GramBlocks& blocks, std::size_t n, double xhsic) {
  require(n >= 3, "sn2_fast requires n >= 3");
  require(static_cast<std::size_t>(blocks.k_cross.rows()) == n, "sn2_fast: block size mismatch");
  return detail::variance_from_moments(blocks, detail::cross_moments(blocks), n, xhsic);
}

/// sqrt(n) xHSIC / s_n from prebuilt blocks.
inline FastStatResult studentize(const GramBlocks& blocks) {
  const std::size_t n = blocks.n;
  require(n >= 3, "studentized statistic requires per-half size n >= 3");
  const auto moments = detail::cross_moments(blocks);
  const auto cross = detail::cross_from_moments(moments, n);
  auto variance = detail::variance_from_moments(blocks, moments, n, cross.xhsic);

  FastStatResult out;
  out.n = n;
  out.xhsic = cross.xhsic;
  out.t1 = cross.t1;
  out.t2 = cross.t2;
  out.t3 = cross.t3;
  out.t4 = cross.t4;
  out.s_n2 = variance.s_n2;
  out.w = std::move(variance.w);
  out.degenerate = !(out.s_n2 > variance.degeneracy_floor);
  if (!out.degenerate) {
    out.studentized = std::sqrt(static_cast<double>(n)) * out.xhsic / std::sqrt(out.s_n2);
  }
  return out;
}

/// Builds the cross blocks and evaluates the studentized cross statistic.
/// Median-heuristic bandwidths are resolved on the full sample.
inline FastStatResult studentized_xhsic(const PairedSample& sample, const SplitView& split,
                                        const KernelSpec& spec_k, const KernelSpec& spec_l) {
  const auto start = std::chrono::steady_clock::now();
  const KernelSpec k = resolve_bandwidth(spec_k, sample.x_rows());
  const KernelSpec l = resolve_bandwidth(spec_l, sample.y_rows());
  auto result = studentize(gram_cross(k, l, sample, split));
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace xindep
