#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sfdia/battery.hpp"
#include "sfdia/error.hpp"

using namespace sfdia::battery;

TEST(Pack, ScalesSeriesParallel) {
  const auto pack = reference_pack();
  EXPECT_NEAR(pack.r0, 1.3e-3 * 492 / 98, 1e-12);
  EXPECT_NEAR(pack.r0, 6.527e-3, 5e-7);
  EXPECT_NEAR(pack.ri, 21.09e-3, 5e-6);
  EXPECT_NEAR(pack.capacity_ah, 6667.0, 0.5);
}

TEST(Pack, SingleCellIsIdentity) {
  CellParams cell;
  const auto pack = build_pack(cell, 1, 1);
  EXPECT_DOUBLE_EQ(pack.r0, cell.r0);
  EXPECT_DOUBLE_EQ(pack.ri, cell.ri);
  EXPECT_DOUBLE_EQ(pack.ci, cell.ci);
  EXPECT_DOUBLE_EQ(pack.capacity_ah, cell.capacity_ah);
  for (double s : {0.0, 0.2, 0.5, 1.0}) EXPECT_DOUBLE_EQ(pack.ocv(s), cell.ocv(s));
}

TEST(Pack, RejectsBadCounts) {
  EXPECT_THROW(build_pack(CellParams{}, 0, 1), sfdia::Error);
}

TEST(Dynamics, ZeroCurrentKeepsSocAndRelaxes) {
  const auto pack = reference_pack();
  BatteryState s{0.6, 5.0, 0.0, false};
  for (double dt : {1.0, 60.0, 3600.0}) {
    const auto n = step_dynamics(s, 0.0, dt, pack);
    EXPECT_DOUBLE_EQ(n.soc, 0.6);
    EXPECT_LT(std::abs(n.v_rc), 5.0);
    EXPECT_GE(n.v_rc, 0.0);
  }
}

TEST(Dynamics, OneHourAtNominalCurrent) {
  const auto pack = reference_pack();
  BatteryState s{0.8, 0.0, 0.0, false};
  for (int k = 0; k < 60; ++k) s = step_dynamics(s, 1667.0, 60.0, pack);
  EXPECT_NEAR(0.8 - s.soc, 0.250, 1e-3);
  EXPECT_NEAR(0.8 - s.soc, 1667.0 / pack.capacity_ah, 1e-12);
}

TEST(Dynamics, RcSteadyState) {
  const auto pack = reference_pack();
  BatteryState s{0.9, 0.0, 0.0, false};
  for (int k = 0; k < 200; ++k) s = step_dynamics(s, 100.0, 60.0, pack);
  EXPECT_NEAR(s.v_rc, 100.0 * pack.ri, 1e-9);
}

TEST(Dynamics, ClampsAtEmpty) {
  const auto pack = reference_pack();
  BatteryState s{0.001, 0.0, 0.0, false};
  s = step_dynamics(s, 1867.0, 600.0, pack);
  EXPECT_EQ(s.soc, 0.0);
  EXPECT_TRUE(s.saturated);
}

TEST(Terminal, OpenCircuit) {
  const auto pack = reference_pack();
  for (double soc : {0.1, 0.25, 0.5, 0.9}) EXPECT_DOUBLE_EQ(terminal_voltage({soc, 0.0, 0.0, false}, 0.0, pack), pack.ocv(soc));
}

TEST(Terminal, FullChargeWithinRating) {
  const auto pack = reference_pack();
  EXPECT_LE(terminal_voltage({1.0, 0.0, 0.0, false}, 0.0, pack), 2100.0);
  EXPECT_GE(terminal_voltage({0.0, 0.0, 0.0, false}, 0.0, pack), 1607.0);
}

TEST(Terminal, LoadedAtSteadyState) {
  const auto pack = reference_pack();
  const BatteryState s{0.5, 1667.0 * pack.ri, 0.0, false};
  EXPECT_NEAR(terminal_voltage(s, 1667.0, pack), pack.ocv(0.5) - 1667.0 * (0.006527 + 0.02109), 0.05);
}

TEST(Ocv, StrictlyIncreasingWithPlateau) {
  const auto ocv = OcvCurve::default_cell();
  double prev = ocv(0.0);
  for (int k = 1; k <= 100; ++k) {
    const double v = ocv(k / 100.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_LT(ocv.slope(0.25), ocv.slope(0.05));
  EXPECT_LT(ocv.slope(0.25), ocv.slope(0.6));
}

TEST(Oracle, ZeroCurrentsConstant) {
  const auto pack = reference_pack();
  const std::vector<double> i(30, 0.0);
  for (double s : coulomb_oracle(0.37, i, 60.0, pack)) EXPECT_DOUBLE_EQ(s, 0.37);
}

TEST(Oracle, MatchesDynamicsSocExactly) {
  const auto pack = reference_pack();
  const std::vector<double> i = {1200.0, -800.0, 30.0, 1667.0};
  const auto traj = coulomb_oracle(0.5, i, 60.0, pack);
  BatteryState s{0.5, 0.0, 0.0, false};
  for (std::size_t k = 0; k < i.size(); ++k) {
    s = step_dynamics(s, i[k], 60.0, pack);
    EXPECT_EQ(traj[k], s.soc);
  }
}
