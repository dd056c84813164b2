#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pnr/numeric.hpp"
#include "pnr/parallel.hpp"

using namespace pnr;

TEST(GoldenSection, FindsParabolaMinimum) {
  const auto m = golden_section_minimize([](double x) { return (x - 1.7) * (x - 1.7) + 3.0; }, -10.0, 10.0, 1e-8);
  EXPECT_NEAR(m.x, 1.7, 1e-7);
  EXPECT_NEAR(m.value, 3.0, 1e-12);
  EXPECT_GT(m.evaluations, 10);
}

TEST(GoldenSection, MinimumAtBracketEdge) {
  const auto m = golden_section_minimize([](double x) { return x; }, 2.0, 5.0, 1e-9);
  EXPECT_NEAR(m.x, 2.0, 1e-8);
}

TEST(NelderMead, Rosenbrock) {
  auto f = [](const std::vector<double>& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  SimplexOptions o;
  o.f_tolerance = 1e-14;
  o.x_tolerance = 1e-9;
  const auto r = nelder_mead(f, {-1.2, 1.0}, {0.5, 0.5}, o);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], 1.0, 1e-5);
}

TEST(NelderMead, TraceNeverIncreases) {
  auto f = [](const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i + 1.0) * (x[i] - 0.3 * i) * (x[i] - 0.3 * i);
    return s;
  };
  const auto r = nelder_mead(f, std::vector<double>(6, 2.0), std::vector<double>(6, 0.5));
  ASSERT_TRUE(r.converged);
  for (std::size_t i = 1; i < r.best_trace.size(); ++i) EXPECT_LE(r.best_trace[i], r.best_trace[i - 1]);
  EXPECT_NEAR(r.value, 0.0, 1e-8);
}

TEST(NelderMead, ReportsNonConvergence) {
  auto f = [](const std::vector<double>& x) { return std::pow(x[0] - 3.0, 2) + std::pow(x[1] + 1.0, 2); };
  SimplexOptions o;
  o.max_evaluations = 10;
  const auto r = nelder_mead(f, {0.0, 0.0}, {1.0, 1.0}, o);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.x.size(), 2u);
}

TEST(NelderMead, NonFiniteValuesAreRejectedMoves) {
  auto f = [](const std::vector<double>& x) { return x[0] < 0 ? NAN : (x[0] - 1.0) * (x[0] - 1.0); };
  const auto r = nelder_mead(f, {0.5}, {1.0});
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
}

TEST(Quadrature, InfiniteAndFiniteRanges) {
  EXPECT_NEAR(integrate([](double x) { return std::exp(-x); }, 0.0, INFINITY), 1.0, 1e-12);
  EXPECT_NEAR(integrate([](double x) { return std::exp(-x * x); }, -INFINITY, INFINITY), std::sqrt(std::numbers::pi),
              1e-12);
  EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi), 2.0, 1e-12);
  EXPECT_EQ(integrate([](double) { return 1.0; }, 2.0, 2.0), 0.0);
}

TEST(Quadrature, AbsoluteToleranceHandlesNegligiblePieces) {
  auto f = [](double x) { return std::exp(-x * x * 1e4); };
  const double tiny = integrate_absolute(f, 5.0, 6.0, 1e-14);
  EXPECT_LT(tiny, 1e-14);
  const double main = integrate_absolute(f, -0.1, 0.1, 1e-14);
  EXPECT_NEAR(main, std::sqrt(std::numbers::pi) / 100.0, 1e-13);
}

TEST(Parallel, EveryIndexOnceAndExceptionsPropagate) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  EXPECT_GE(worker_count(), 1u);
}
