#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "intentd/stats.hpp"
#include "stats_oracles.hpp"

namespace intentd {
namespace {

// Reference measurements for multi-to-single-point intents: mean REST
// installation time (ms) per workload.
const std::vector<std::pair<double, double>> kMultiToSingleRestMeans{
    {1000, 637.99},    {2000, 1251.51},   {3000, 1859.501},  {4000, 2506.155},
    {5000, 3122.163},  {10000, 6155.655}, {15000, 9215.017}, {20000, 12330.511}};

double rel(double a, long double b) { return static_cast<double>(std::abs((a - b) / b)); }

TEST(TQuantile, MatchesIntegratedDensity) {
  for (std::size_t dof : {1, 2, 4, 9, 19, 49, 120}) {
    EXPECT_LT(rel(t_quantile_975(dof), testing::student_t_975(dof)), 1e-9) << "dof " << dof;
  }
  EXPECT_NEAR(t_quantile_975(49), 2.0096, 5e-5);
}

TEST(Summarize, HandCases) {
  const std::vector<double> a{2, 4, 6};
  const auto s = summarize(a);
  EXPECT_EQ(s.n, 3u);
  EXPECT_EQ(s.mean_ms, 4.0);
  EXPECT_EQ(s.stddev_ms, 2.0);
  EXPECT_DOUBLE_EQ(s.cov, 0.5);

  const std::vector<double> flat{5, 5, 5, 5};
  const auto f = summarize(flat);
  EXPECT_EQ(f.stddev_ms, 0.0);
  EXPECT_EQ(f.ci95_ms, 0.0);
  EXPECT_EQ(f.cov, 0.0);
}

TEST(Summarize, FiftySampleHalfWidth) {
  // n = 50 with stddev 13.686: the t-based half-width is about 3.890 ms.
  EXPECT_NEAR(t_quantile_975(49) * 13.686 / std::sqrt(50.0), 3.890, 5e-4);
  std::vector<double> xs(50);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = (i % 2 ? 1.0 : -1.0);
  // Rescale so the sample stddev is exactly 13.686.
  const double sd = summarize(xs).stddev_ms;
  for (auto& x : xs) x = 600.0 + x * 13.686 / sd;
  const auto s = summarize(xs);
  EXPECT_NEAR(s.stddev_ms, 13.686, 1e-9);
  EXPECT_NEAR(s.ci95_ms, 3.8895, 1e-4);
}

TEST(Summarize, InsufficientSamples) {
  const std::vector<double> one{1.0};
  EXPECT_THROW(summarize(one), Error);
  EXPECT_THROW(summarize(std::span<const double>{}), Error);
}

TEST(Summarize, MatchesOracleOnRandomSamples) {
  std::mt19937_64 rng(1000);
  std::lognormal_distribution<double> latency(3.0, 0.8);
  for (int round = 0; round < 20; ++round) {
    std::vector<double> xs(2 + round * 37);
    for (auto& x : xs) x = latency(rng);
    const auto s = summarize(xs);
    const auto o = testing::welford(xs);
    const long double t = testing::student_t_975(static_cast<long double>(xs.size() - 1));
    EXPECT_LT(rel(s.mean_ms, o.mean), 1e-9);
    EXPECT_LT(rel(s.stddev_ms, o.stddev), 1e-9);
    EXPECT_LT(rel(s.ci95_ms, t * o.stddev / std::sqrt(static_cast<long double>(xs.size()))), 1e-9);
    EXPECT_LT(rel(s.cov, o.stddev / o.mean), 1e-9);
  }
}

TEST(FitLinear, ExactLine) {
  const std::vector<std::pair<double, double>> pts{{0, 1}, {1, 3}, {2, 5}, {10, 21}};
  const auto f = fit_linear(pts);
  EXPECT_DOUBLE_EQ(f.slope, 2.0);
  EXPECT_DOUBLE_EQ(f.intercept, 1.0);
  EXPECT_DOUBLE_EQ(f.r_squared, 1.0);
}

TEST(FitLinear, FlatLineReportsUnitR2) {
  const std::vector<std::pair<double, double>> pts{{1, 7}, {2, 7}, {3, 7}};
  const auto f = fit_linear(pts);
  EXPECT_EQ(f.slope, 0.0);
  EXPECT_EQ(f.r_squared, 1.0);
}

TEST(FitLinear, Errors) {
  const std::vector<std::pair<double, double>> two{{1, 1}, {2, 2}};
  const std::vector<std::pair<double, double>> same_x{{3, 1}, {3, 2}, {3, 4}};
  try {
    fit_linear(two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
  }
  try {
    fit_linear(same_x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Degenerate);
  }
}

TEST(FitLinear, ReferenceRestMeansAreLinear) {
  const auto f = fit_linear(kMultiToSingleRestMeans);
  const auto [slope, intercept] = testing::normal_equations(kMultiToSingleRestMeans);
  EXPECT_GT(f.r_squared, 0.999);
  EXPECT_LT(rel(f.slope, slope), 1e-9);
  EXPECT_LT(rel(f.intercept, intercept), 1e-6);
  EXPECT_NEAR(f.slope, 0.614, 0.0005);
}

TEST(FitLinear, RandomLinesRecovered) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> coef(-5, 5);
  std::normal_distribution<double> noise(0, 0.01);
  for (int round = 0; round < 50; ++round) {
    std::vector<std::pair<double, double>> pts;
    const double a = coef(rng), b = coef(rng);
    for (int x = 100; x <= 2000; x += 100) pts.emplace_back(x, a * x + b + noise(rng));
    const auto f = fit_linear(pts);
    const auto [slope, intercept] = testing::normal_equations(pts);
    EXPECT_NEAR(f.slope, static_cast<double>(slope), 1e-9 * std::max(1.0, std::abs(f.slope)));
    EXPECT_GE(f.r_squared, 0.0);
    EXPECT_LE(f.r_squared, 1.0);
  }
}

}  // namespace
}  // namespace intentd
