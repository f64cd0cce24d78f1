#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "test_support.hpp"

namespace xindep {
namespace {

namespace fs = std::filesystem;

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = fs::temp_directory_path() / ("xindep_core_" + name);
  std::ofstream(path) << content;
  return path.string();
}

TEST(LoadCsv, ParsesSmallFile) {
  const auto path = write_temp("ok.csv", "x0,y0\n1,2\n3,4\n5.5,-6\n7e-1,8\n");
  const PairedSample s = load_csv(path, 1, 1);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s.dim_x(), 1u);
  EXPECT_EQ(s.dim_y(), 1u);
  EXPECT_DOUBLE_EQ(s.x(2)[0], 5.5);
  EXPECT_DOUBLE_EQ(s.y(2)[0], -6.0);
  EXPECT_DOUBLE_EQ(s.x(3)[0], 0.7);
}

TEST(LoadCsv, HeaderWithoutY0IsDimensionMismatch) {
  const auto path = write_temp("nohdr.csv", "x0,x1\n1,2\n");
  EXPECT_THROW(load_csv(path, 1, 1), InputError);
  const auto short_path = write_temp("short.csv", "x0\n1\n");
  EXPECT_THROW(load_csv(short_path, 1, 1), InputError);
}

TEST(LoadCsv, ReportsRowAndColumnOfBadCell) {
  const auto path = write_temp("bad.csv", "x0,y0\n1,2\n3,abc\n");
  try {
    load_csv(path, 1, 1);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
  const auto inf_path = write_temp("inf.csv", "x0,y0\n1,inf\n");
  EXPECT_THROW(load_csv(inf_path, 1, 1), InputError);
  const auto nan_path = write_temp("nan.csv", "x0,y0\nnan,1\n");
  EXPECT_THROW(load_csv(nan_path, 1, 1), InputError);
}

TEST(LoadCsv, MissingFile) {
  EXPECT_THROW(load_csv("/nonexistent/xindep.csv", 1, 1), InputError);
}

TEST(LoadCsv, SaveThenLoadRecoversValues) {
  RngStream rng(11, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t rows = 1 + rng.uniform_index(30);
    const std::size_t dx = 1 + rng.uniform_index(4);
    const std::size_t dy = 1 + rng.uniform_index(4);
    PairedSample s = testing_support::random_sample(rows, dx, dy, rng);
    // Mix magnitudes so formatting is exercised on tiny and huge values.
    RowMatrix x = s.x_rows();
    x(0, 0) *= 1e-300;
    if (rows > 1) x(1, 0) *= 1e300;
    s = PairedSample(x, s.y_rows());
    const auto path = write_temp("rt.csv", "");
    save_csv(s, path);
    const PairedSample back = load_csv(path, dx, dy);
    ASSERT_EQ(back.size(), rows);
    EXPECT_LE((back.x_rows() - s.x_rows()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((back.y_rows() - s.y_rows()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(back.x_rows() == s.x_rows());  // shortest round-trip format is exact
  }
}

TEST(PairedSampleInvariants, RejectsMismatchedOrNonFinite) {
  EXPECT_THROW(PairedSample(RowMatrix::Zero(3, 1), RowMatrix::Zero(2, 1)), ContractError);
  RowMatrix bad = RowMatrix::Zero(2, 1);
  bad(1, 0) = std::nan("");
  EXPECT_THROW(PairedSample(bad, RowMatrix::Zero(2, 1)), ContractError);
}

TEST(MakeSplit, EvenOddAndTooSmall) {
  RngStream rng(1, 0);
  const auto even = make_split(testing_support::random_sample(10, 1, 1, rng));
  EXPECT_EQ(even.n, 5u);
  EXPECT_EQ(even.dropped, 0u);
  EXPECT_EQ(even.first(0), 0u);
  EXPECT_EQ(even.second(0), 5u);
  const auto odd = make_split(testing_support::random_sample(11, 1, 1, rng));
  EXPECT_EQ(odd.n, 5u);
  EXPECT_EQ(odd.dropped, 1u);
  EXPECT_EQ(odd.second(odd.n - 1), 9u);
  EXPECT_THROW(make_split(testing_support::random_sample(4, 1, 1, rng)), ContractError);
}

TEST(MakeSplit, HalvesNeverOverlap) {
  RngStream rng(2, 0);
  for (std::size_t total = 6; total < 60; ++total) {
    const auto s = make_split(testing_support::random_sample(total, 1, 1, rng));
    EXPECT_LE(s.first(s.n - 1), s.second(0) - 1);
    EXPECT_LE(s.second(s.n - 1), total - 1);
    EXPECT_EQ(2 * s.n + s.dropped, total);
  }
}

TEST(Rng, SameStreamIsDeterministic) {
  const auto a = rng_draw_standard_normal(RngStream(42, 3), 1000);
  const auto b = rng_draw_standard_normal(RngStream(42, 3), 1000);
  EXPECT_EQ(a, b);
  const auto c = rng_draw_standard_normal(RngStream(43, 3), 1000);
  EXPECT_NE(a, c);
}

TEST(Rng, DistinctStreamsAreUncorrelated) {
  const std::size_t m = 100000;
  const auto a = rng_draw_standard_normal(RngStream(7, 0), m);
  const auto b = rng_draw_standard_normal(RngStream(7, 1), m);
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / m;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / m;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  EXPECT_LT(std::abs(sab / std::sqrt(saa * sbb)), 0.01);
}

TEST(Rng, MomentsOfMillionDraws) {
  const std::size_t m = 1000000;
  const auto a = rng_draw_standard_normal(RngStream(2024, 9), m);
  CompensatedSum s, s2;
  for (double v : a) s.add(v);
  const double mean = s.value() / m;
  for (double v : a) s2.add((v - mean) * (v - mean));
  const double var = s2.value() / (m - 1);
  EXPECT_LT(std::abs(mean), 0.01);
  EXPECT_GE(var, 0.99);
  EXPECT_LE(var, 1.01);
}

TEST(Rng, ChildStreamsDifferAndAreReproducible) {
  const RngStream parent(5, 17);
  auto c1 = parent.child(1);
  auto c1b = parent.child(1);
  auto c2 = parent.child(2);
  const auto x = c1.next_u64();
  EXPECT_EQ(x, c1b.next_u64());
  EXPECT_NE(x, c2.next_u64());
}

TEST(Rng, PermutationIsABijection) {
  RngStream rng(3, 3);
  auto p = rng.permutation(257);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
}

TEST(Accumulate, CompensationRecoversSmallTerms) {
  std::vector<double> values{1e16, 1.0, -1e16, 1.0};
  EXPECT_DOUBLE_EQ(pairwise_sum(values), 2.0);
  std::vector<double> many(10000, 0.1);
  EXPECT_NEAR(pairwise_sum(many), 1000.0, 1e-10);
}

}  // namespace
}  // namespace xindep
