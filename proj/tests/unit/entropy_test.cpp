#include <gtest/gtest.h>

#include <cmath>

#include "crosstune/entropy.hpp"

using namespace crosstune;

namespace {

EntropySchedule default_schedule() { return make_schedule(5 * std::log(10.0), 5); }

}  // namespace

TEST(Alpha, Examples) {
  EXPECT_EQ(alpha(Telemetry{0, 0, 11.5, 5}), 0.0);
  const double lnv = 5 * std::log(10.0);
  EXPECT_NEAR(alpha(Telemetry{29, 29, lnv, 5}), 58.0 / (2 * 0.25 * lnv * 5), 1e-12);
  EXPECT_NEAR(alpha(Telemetry{29, 29, lnv, 5}), 2.02, 5e-3);
  // ln volume is floored at 1
  EXPECT_NEAR(alpha(Telemetry{1, 1, std::log(2.0), 1}), 2.0 / (2 * 0.25), 1e-12);
}

TEST(Alpha, LinearInStepsPlusHistory) {
  for (std::int64_t s = 0; s < 200; ++s) {
    for (std::int64_t h = 0; h < 200; h += 7) {
      const Telemetry t{s, h, 17.3, 6};
      const Telemetry doubled{2 * s, 2 * h, 17.3, 6};
      const Telemetry swapped{h, s, 17.3, 6};
      ASSERT_NEAR(alpha(doubled), 2 * alpha(t), 1e-12);
      ASSERT_NEAR(alpha(swapped), alpha(t), 1e-12);
      ASSERT_NEAR(alpha(t), static_cast<double>(s + h) * alpha(Telemetry{1, 0, 17.3, 6}), 1e-9);
    }
  }
}

TEST(Schedule, ShapeIsInputIndependent) {
  for (const auto& s : {default_schedule(), make_schedule(std::log(2.0), 1)}) {
    ASSERT_EQ(s.plateaus, (std::vector<double>{1.0, 0.6, 0.35, 0.15, 0.02}));
    ASSERT_EQ(s.transitions, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
    EXPECT_EQ(s.h_min, 0.02);
  }
}

TEST(Entropy, Examples) {
  const auto s = default_schedule();
  EXPECT_NEAR(entropy(0.0, s), 1.0, 1e-3);
  EXPECT_EQ(entropy(10.0, s), 0.02);
  EXPECT_NEAR(entropy(0.625, s), 0.35, 1e-2);
}

TEST(Entropy, MonotoneAndBoundedOnDenseGrid) {
  const auto s = default_schedule();
  double previous = 1.0;
  for (int i = 0; i <= 200000; ++i) {
    const double a = i * 1e-5 * 2.0;
    const double h = entropy(a, s);
    ASSERT_LE(h, previous) << a;
    ASSERT_GE(h, 0.02);
    ASSERT_LE(h, 1.0);
    previous = h;
  }
}

TEST(Entropy, PlateausAreFlatBetweenTransitions) {
  const auto s = default_schedule();
  // Plateau interiors, keeping three softening widths away from each step.
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), s.transitions.begin(), s.transitions.end());
  edges.push_back(1.5);
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    const double from = j == 0 ? 0.0 : edges[j] + 3 * s.softening;
    const double to = edges[j + 1] - 3 * s.softening;
    EXPECT_LT(std::abs(entropy(from, s) - entropy(to, s)), 0.05) << j;
  }
}

TEST(Entropy, DerivativePeaksAtTransitionsAndIsSmallAtMidpoints) {
  const auto s = default_schedule();
  const double dx = 1e-4;
  auto slope = [&](double a) { return std::abs(entropy(a + dx, s) - entropy(a - dx, s)) / (2 * dx); };
  std::vector<double> maxima;
  double prev2 = slope(dx), prev1 = slope(2 * dx);
  for (double a = 3 * dx; a < 1.5; a += dx) {
    const double cur = slope(a);
    if (prev1 > prev2 && prev1 >= cur && prev1 > 1.0) maxima.push_back(a - dx);
    prev2 = prev1;
    prev1 = cur;
  }
  ASSERT_EQ(maxima.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(maxima[j], s.transitions[j], 5e-3);
  for (double mid : {0.125, 0.375, 0.625, 0.875}) EXPECT_LT(slope(mid), 0.05) << mid;
}

TEST(Entropy, LargerSpacesKeepEntropyHigherAtEqualSteps) {
  for (std::int64_t step = 0; step < 300; step += 5) {
    const Telemetry small{step, step, 5 * std::log(10.0), 5};
    const Telemetry large{step, step, 10 * std::log(100.0), 10};
    const auto ss = make_schedule(small.ln_volume, small.dims);
    const auto sl = make_schedule(large.ln_volume, large.dims);
    ASSERT_GE(entropy(alpha(large), sl), entropy(alpha(small), ss));
  }
}

TEST(Phase, InflectionIsExclusive) {
  EXPECT_FALSE(is_exploitation(1.0));
  EXPECT_TRUE(is_exploitation(0.02));
  EXPECT_FALSE(is_exploitation(0.3));
  EXPECT_EQ(to_string(Phase::kExploitation), "exploitation");
}
