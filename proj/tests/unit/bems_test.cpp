#include <gtest/gtest.h>

#include "sfdia/bems.hpp"
#include "sfdia/error.hpp"

using namespace sfdia::bems;

namespace {
const BemsParams kParams;
const SocSchedule kSchedule = SocSchedule::defaults();
constexpr double kHour = 3600.0;
}  // namespace

TEST(Schedule, Anchors) {
  EXPECT_DOUBLE_EQ(soc_reference(18 * kHour, kSchedule), 0.90);
  EXPECT_DOUBLE_EQ(soc_reference(24 * kHour, kSchedule), 0.45);
  EXPECT_DOUBLE_EQ(soc_reference(0.0, kSchedule), 0.45);
  EXPECT_NEAR(soc_reference(21 * kHour, kSchedule), 0.675, 1e-12);
  EXPECT_NEAR(soc_reference(45 * kHour, kSchedule), 0.675, 1e-12);
}

TEST(Schedule, RejectsUnsorted) {
  SocSchedule s{{{0.0, 0.5}, {12.0, 0.3}, {6.0, 0.4}, {24.0, 0.5}}};
  EXPECT_THROW(s.validate(), sfdia::Error);
}

TEST(Dispatch, BalancedInterior) {
  const auto c = dispatch(0.22, 1e6, 1e6, 10 * kHour, kParams, kSchedule);
  EXPECT_NEAR(c.bess_power_setpoint, 0.0, 1e3);
  EXPECT_FALSE(c.shed_noncritical);
  EXPECT_EQ(c.pv_curtailment, 0.0);
}

TEST(Dispatch, ShedsWhenLowAtNight) {
  const auto c = dispatch(0.199, 0.0, 1e6, 2 * kHour, kParams, kSchedule);
  EXPECT_TRUE(c.shed_noncritical);
  EXPECT_LT(served_load(c, 1e6, kParams), 1e6);
}

TEST(Dispatch, CurtailsWhenFull) {
  const auto c = dispatch(0.905, 4e6, 1e6, 12 * kHour, kParams, kSchedule);
  EXPECT_GT(c.pv_curtailment, 0.0);
  EXPECT_LT(pv_used(c, 4e6), 4e6);
}

TEST(Dispatch, SetpointWithinRating) {
  for (double soc : {0.1, 0.3, 0.6, 0.95})
    for (double h : {0.0, 6.0, 12.0, 19.0}) {
      const auto c = dispatch(soc, 4.5e6, 0.5e6, h * kHour, kParams, kSchedule);
      EXPECT_LE(std::abs(c.bess_power_setpoint), kParams.rating_w + 1e-6);
    }
}

TEST(Shutdown, LowSocAtMidnight) {
  EXPECT_TRUE(check_shutdown(0.05, 0.0, 0.0, 4e5, kParams).shutdown);
}

TEST(Shutdown, LowSocWithPvToSpare) {
  EXPECT_FALSE(check_shutdown(0.05, 3e6, 14 * kHour, 4e5, kParams).shutdown);
}

TEST(Shutdown, HealthySoc) {
  EXPECT_FALSE(check_shutdown(0.5, 0.0, 0.0, 4e5, kParams).shutdown);
}

TEST(Shutdown, CriticalWindowLeavesNoMargin) {
  EXPECT_TRUE(check_shutdown(0.1, 3e6, 9 * kHour, 4e5, kParams).shutdown);
}
