#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "covgame/optimize.hpp"

using covgame::maximize_scalar;
using covgame::pattern_search;
using covgame::PatternSearchConfig;
using covgame::ScalarMaximizerConfig;
using covgame::StrategyInterval;

TEST(StrategyInterval, SamplesHitBothEndpointsExactly) {
  StrategyInterval s(-0.2617993877991494, 0.2617993877991494);
  EXPECT_EQ(s.sample(0, 181), s.lo);
  EXPECT_EQ(s.sample(180, 181), s.hi);
  EXPECT_NEAR(s.sample(90, 181), 0.0, 1e-17);
  EXPECT_THROW(StrategyInterval(1.0, -1.0), std::invalid_argument);
}

TEST(MaximizeScalar, InteriorQuadratic) {
  ScalarMaximizerConfig cfg;
  auto m = maximize_scalar([](double x) { return -x * x; }, StrategyInterval(-1.0, 1.0), cfg);
  EXPECT_NEAR(m.theta, 0.0, cfg.refine_tolerance);
}

TEST(MaximizeScalar, OffGridQuadratic) {
  ScalarMaximizerConfig cfg;
  auto m = maximize_scalar([](double x) { return -(x - 0.123456) * (x - 0.123456); }, StrategyInterval(-1.0, 1.0), cfg);
  EXPECT_NEAR(m.theta, 0.123456, cfg.refine_tolerance);
}

TEST(MaximizeScalar, EndpointIsExact) {
  auto m = maximize_scalar([](double x) { return x; }, StrategyInterval(-1.0, 1.0), {});
  EXPECT_EQ(m.theta, 1.0);
  EXPECT_EQ(m.value, 1.0);
}

TEST(MaximizeScalar, DegenerateIntervalEvaluatesOnce) {
  auto m = maximize_scalar([](double x) { return x; }, StrategyInterval(0.5, 0.5), {});
  EXPECT_EQ(m.theta, 0.5);
  EXPECT_EQ(m.evaluations, 1u);
}

TEST(MaximizeScalar, NonFiniteProbeIsNamed) {
  try {
    (void)maximize_scalar([](double x) { return x > 0.5 ? std::numeric_limits<double>::quiet_NaN() : x; },
                          StrategyInterval(0.0, 1.0), {});
    FAIL() << "expected NonFiniteObjective";
  } catch (const covgame::NonFiniteObjective& e) {
    EXPECT_GT(e.probe(), 0.5);
    EXPECT_NE(std::string(e.what()).find("probe"), std::string::npos);
  }
}

TEST(MaximizeScalar, RejectsBadConfig) {
  ScalarMaximizerConfig cfg;
  cfg.coarse_points = 2;
  EXPECT_THROW((void)maximize_scalar([](double) { return 0.0; }, StrategyInterval(0, 1), cfg), std::invalid_argument);
  cfg = {};
  cfg.refine_tolerance = 0.0;
  EXPECT_THROW((void)maximize_scalar([](double) { return 0.0; }, StrategyInterval(0, 1), cfg), std::invalid_argument);
}

namespace {

// Sum of random plateaus of height h_i over [a_i, b_i), each at least
// `min_width` wide, minus a small quadratic tilt.
struct StepObjective {
  std::vector<double> a, b, h;
  double tilt;
  double operator()(double x) const {
    double v = -tilt * x * x;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (x >= a[i] && x < b[i]) v += h[i];
    return v;
  }
};

StepObjective random_steps(std::mt19937_64& rng, double min_width) {
  std::uniform_real_distribution<double> pos(-1.0, 1.0), wid(min_width, 0.3), ht(1.0, 10.0);
  StepObjective f;
  f.tilt = 0.0;
  for (int i = 0; i < 6; ++i) {
    const double a = pos(rng);
    f.a.push_back(a);
    f.b.push_back(a + wid(rng));
    f.h.push_back(std::round(ht(rng)));
  }
  return f;
}

// Disjoint plateaus, one per sixth of [-1, 1].
StepObjective disjoint_steps(std::mt19937_64& rng, double min_width) {
  StepObjective f;
  f.tilt = 0.0;
  const double slot = 2.0 / 6.0;
  std::uniform_real_distribution<double> u(0.0, 1.0), ht(1.0, 10.0);
  for (int i = 0; i < 6; ++i) {
    const double w = min_width + u(rng) * (slot - min_width);
    const double a = -1.0 + i * slot + u(rng) * (slot - w);
    f.a.push_back(a);
    f.b.push_back(a + w);
    f.h.push_back(std::round(ht(rng)));
  }
  return f;
}

}  // namespace

TEST(MaximizeScalar, PlateauHeightMatchesTenfoldFinerGrid) {
  // Plateaus wider than the coarse spacing are always found; the returned
  // value is then a plateau height, equal to the dense-grid maximum.
  std::mt19937_64 rng(3);
  ScalarMaximizerConfig cfg;
  cfg.coarse_points = 101;
  const StrategyInterval I(-1.0, 1.0);
  const double spacing = I.width() / 100.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto f = disjoint_steps(rng, 1.01 * spacing);
    double dense = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 1001; ++i) dense = std::max(dense, f(I.sample(i, 1001)));
    auto m = maximize_scalar(f, I, cfg);
    EXPECT_EQ(m.value, dense) << "trial " << trial;
  }
}

TEST(MaximizeScalar, NeverBelowBestCoarseSample) {
  std::mt19937_64 rng(5);
  ScalarMaximizerConfig cfg;
  cfg.coarse_points = 37;
  const StrategyInterval I(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto f = random_steps(rng, 0.001);
    f.tilt = 0.7;
    double coarse = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cfg.coarse_points; ++i) coarse = std::max(coarse, f(I.sample(i, cfg.coarse_points)));
    auto m = maximize_scalar(f, I, cfg);
    EXPECT_GE(m.value, coarse);
    EXPECT_TRUE(I.contains(m.theta));
    EXPECT_EQ(m.value, f(m.theta));
  }
}

TEST(MaximizeScalar, Deterministic) {
  std::mt19937_64 rng(9);
  auto f = random_steps(rng, 0.01);
  f.tilt = 0.3;
  auto a = maximize_scalar(f, StrategyInterval(-1, 1), {});
  auto b = maximize_scalar(f, StrategyInterval(-1, 1), {});
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(PatternSearch, NegativeNormConvergesToOrigin) {
  PatternSearchConfig cfg;
  cfg.initial_step = 0.5;
  cfg.min_step = 1e-6;
  std::vector<StrategyInterval> box(5, StrategyInterval(-2.0, 2.0));
  std::vector<double> start{1.3, -0.7, 0.2, 1.9, -1.1};
  auto r = pattern_search(
      [](std::span<const double> x) {
        double s = 0;
        for (double v : x) s -= v * v;
        return s;
      },
      box, start, cfg);
  for (double v : r.theta) EXPECT_NEAR(v, 0.0, cfg.min_step * std::sqrt(5.0) * 2.0);
}

TEST(PatternSearch, SeparableRecoversEachCenter) {
  const std::vector<double> c{0.3, -0.45, 0.05};
  std::vector<StrategyInterval> box(3, StrategyInterval(-1.0, 1.0));
  std::vector<double> start(3, 0.0);
  PatternSearchConfig cfg;
  cfg.min_step = 1e-7;
  auto r = pattern_search(
      [&](std::span<const double> x) {
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) s -= (x[i] - c[i]) * (x[i] - c[i]);
        return s;
      },
      box, start, cfg);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(r.theta[i], c[i], 1e-6);
}

TEST(PatternSearch, OneDimensionAgreesWithScalarMaximizer) {
  auto f1 = [](double x) { return std::sin(3.0 * x) - 0.2 * x * x; };
  const StrategyInterval I(-0.5, 1.0);
  auto scalar = maximize_scalar(f1, I, {});
  PatternSearchConfig cfg;
  cfg.initial_step = 0.25;
  cfg.min_step = 1e-8;
  std::vector<StrategyInterval> box{I};
  std::vector<double> start{0.0};
  auto r = pattern_search([&](std::span<const double> x) { return f1(x[0]); }, box, start, cfg);
  EXPECT_NEAR(r.theta[0], scalar.theta, 1e-4);
  EXPECT_NEAR(r.value, scalar.value, 1e-8);
}

TEST(PatternSearch, AcceptedValuesStrictlyIncreaseAndStayInBox) {
  std::mt19937_64 rng(13);
  std::vector<StrategyInterval> box(4, StrategyInterval(-1.0, 1.0));
  std::vector<double> start(4, 0.0);
  std::vector<StepObjective> parts;
  for (int i = 0; i < 4; ++i) parts.push_back(random_steps(rng, 0.05));
  PatternSearchConfig cfg;
  cfg.initial_step = 1.0;
  cfg.step_expand = 2.0;
  cfg.min_step = 1e-5;
  auto r = pattern_search(
      [&](std::span<const double> x) {
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) s += parts[i](x[i]) - 0.1 * x[i] * x[i];
        return s;
      },
      box, start, cfg);
  for (std::size_t i = 1; i < r.accepted_values.size(); ++i) EXPECT_GT(r.accepted_values[i], r.accepted_values[i - 1]);
  for (std::size_t i = 0; i < r.theta.size(); ++i) EXPECT_TRUE(box[i].contains(r.theta[i]));
  EXPECT_EQ(r.accepted_values.back(), r.value);
}

TEST(PatternSearch, StopsAtEvaluationBudget) {
  PatternSearchConfig cfg;
  cfg.max_evals = 17;
  cfg.min_step = 1e-12;
  std::vector<StrategyInterval> box(3, StrategyInterval(-1.0, 1.0));
  std::vector<double> start(3, 0.0);
  auto r = pattern_search([](std::span<const double> x) { return -std::abs(x[0] - 0.3); }, box, start, cfg);
  EXPECT_LE(r.evaluations, 17u);
}

TEST(PatternSearch, RejectsBadInput) {
  std::vector<StrategyInterval> box(1, StrategyInterval(-1.0, 1.0));
  std::vector<double> outside{2.0};
  auto f = [](std::span<const double>) { return 0.0; };
  EXPECT_THROW((void)pattern_search(f, box, outside, {}), std::invalid_argument);
  PatternSearchConfig cfg;
  cfg.step_shrink = 1.0;
  std::vector<double> start{0.0};
  EXPECT_THROW((void)pattern_search(f, box, start, cfg), std::invalid_argument);
  cfg = {};
  cfg.step_expand = 0.5;
  EXPECT_THROW((void)pattern_search(f, box, start, cfg), std::invalid_argument);
  auto nan = [](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); };
  EXPECT_THROW((void)pattern_search(nan, box, start, {}), covgame::NonFiniteObjective);
}
