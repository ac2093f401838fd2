#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sfdia/error.hpp"
#include "sfdia/measurement.hpp"
#include "sfdia/power_flow.hpp"

using namespace sfdia::grid;

namespace {

Network two_bus(Complex z) {
  Network net;
  net.buses = {{1, BusKind::Slack, 12.47}, {2, BusKind::PQ, 12.47}};
  net.lines = {{0, 1, z, 0.0}};
  return net;
}

}  // namespace

TEST(PowerFlow, FlatWithoutLoad) {
  const auto net = Network::five_bus();
  const std::vector<Complex> s(net.size(), 0.0);
  const auto r = solve_power_flow(net, s);
  for (const auto& b : r.buses) {
    EXPECT_NEAR(b.v_mag, net.slack_voltage, 1e-12);
    EXPECT_NEAR(b.v_ang, 0.0, 1e-12);
  }
}

TEST(PowerFlow, TwoBusMatchesClosedForm) {
  const Complex z(0.02, 0.06);
  const auto net = two_bus(z);
  const double p = 0.3, q = 0.1;  // consumed at bus 2
  const std::vector<Complex> s = {0.0, Complex(-p, -q)};
  const auto r = solve_power_flow(net, s);
  const double R = z.real(), X = z.imag();
  const double b = 1.0 - 2.0 * (p * R + q * X);
  const double v2 = std::sqrt(0.5 * (b + std::sqrt(b * b - 4.0 * (p * p + q * q) * (R * R + X * X))));
  EXPECT_NEAR(r.buses[1].v_mag, v2, 1e-8);
  EXPECT_NEAR(r.injections(0).real(), p + (p * p + q * q) / (v2 * v2) * R, 1e-8);
}

TEST(PowerFlow, FullScaleConvergesQuickly) {
  const auto net = Network::five_bus();
  std::vector<Complex> s(net.size(), 0.0);
  s[net.pv_index()] = {4.5e6 / (net.base_mva * 1e6), 0.0};
  s[net.load_index()] = {-1.2e6 / (net.base_mva * 1e6), -0.4e6 / (net.base_mva * 1e6)};
  const auto r = solve_power_flow(net, s);
  EXPECT_LE(r.iterations, 10);
  EXPECT_LT(r.mismatch, 1e-8);
  const Complex loss = network_losses(net, to_phasors(r.buses));
  EXPECT_NEAR(r.injections.sum().real(), loss.real(), 1e-8);
}

TEST(PowerFlow, ImpossibleLoadThrows) {
  const auto net = two_bus({0.05, 0.2});
  const std::vector<Complex> s = {0.0, Complex(-20.0, -10.0)};
  EXPECT_THROW(solve_power_flow(net, s), sfdia::NonConvergenceError);
}

TEST(Network, RejectsTwoSlacks) {
  auto net = Network::five_bus();
  net.buses[1].kind = BusKind::Slack;
  EXPECT_THROW(net.validate(), sfdia::Error);
}

TEST(Vsi, ZeroModulation) {
  const auto out = vsi_couple(0.0, 1800.0, 0.0, VsiParams{}, 0.0);
  EXPECT_EQ(out.v_r, 0.0);
}

TEST(Vsi, ConverterVoltageAndDcPower) {
  VsiParams p;
  const auto out = vsi_couple(1.0, 1800.0, 1667.0, p, 0.0);
  EXPECT_NEAR(out.v_r, 1272.79, 5e-3);
  EXPECT_NEAR(out.p_dc, 3.0006e6, 1.0);
  EXPECT_NEAR(out.p_ri + out.p_dc + out.p_loss, 0.0, 1e-6);
}

TEST(Measurement, ZeroNoiseEqualsModel) {
  const auto net = Network::five_bus();
  const auto plan = MeteringPlan::default_plan(net);
  std::vector<Complex> s(net.size(), 0.0);
  s[net.pv_index()] = {0.4, 0.0};
  s[net.load_index()] = {-0.2, -0.05};
  const auto pf = solve_power_flow(net, s);
  NoiseSpec zero{0.0, 0.0, 0.0, 1};
  std::mt19937_64 rng(3);
  const auto z = synthesize_measurements(pf.buses, {1800.0, 10.0, 0.85, 0.5}, plan, net, zero, rng);
  const auto ref = scada_values(to_phasors(pf.buses), plan, net);
  ASSERT_EQ(z.scada.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(z.scada[i], ref[i]);
  EXPECT_EQ(z.bess.v_dc, 1800.0);
  EXPECT_EQ(z.bess.i_dc, 10.0);
}

TEST(Measurement, FixedSeedIsBitIdentical) {
  const auto net = Network::five_bus();
  const auto plan = MeteringPlan::default_plan(net);
  const std::vector<BusState> buses(net.size());
  std::mt19937_64 a(11), b(11);
  const auto za = synthesize_measurements(buses, {1800.0, 0.0, 0.8, 0.5}, plan, net, NoiseSpec{}, a);
  const auto zb = synthesize_measurements(buses, {1800.0, 0.0, 0.8, 0.5}, plan, net, NoiseSpec{}, b);
  EXPECT_EQ(za.scada, zb.scada);
  EXPECT_EQ(za.bess.v_dc, zb.bess.v_dc);
}

TEST(Measurement, NoiseClassStd) {
  const auto net = Network::five_bus();
  MeteringPlan plan;
  plan.scada.push_back({ChannelKind::VMag, 2, true, NoiseClass::Magnitude, 1.0});
  const std::vector<BusState> buses(net.size());
  NoiseSpec noise;
  std::mt19937_64 rng(5);
  double sum = 0.0, sq = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const double e = synthesize_measurements(buses, {1800.0, 0.0, 0.8, 0.5}, plan, net, noise, rng).scada[0] - 1.0;
    sum += e;
    sq += e * e;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(sd, noise.sigma_mag, 0.05 * noise.sigma_mag);
}

TEST(MeasurementModel, SelfConsistentAtSolvedState) {
  const auto net = Network::five_bus();
  const auto plan = MeteringPlan::default_plan(net);
  VsiParams vsi;
  std::vector<Complex> s(net.size(), 0.0);
  s[net.pv_index()] = {0.5, 0.0};
  s[net.load_index()] = {-0.3, -0.1};
  const auto pf = solve_power_flow(net, s);
  const double v_dc = 1800.0;
  const double m = pf.buses[net.slack_index()].v_mag * vsi.ac_base_volts * std::sqrt(2.0) / v_dc;
  const StateLayout layout(net);
  const auto x = layout.pack(pf.buses, v_dc, m);
  const auto h = h_eval(x, net, plan, vsi);
  const auto ref = scada_values(to_phasors(pf.buses), plan, net);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(h(static_cast<Eigen::Index>(i)), ref[i], 1e-10);
  EXPECT_DOUBLE_EQ(h(static_cast<Eigen::Index>(plan.vdc_slot())), v_dc);
}

TEST(MeasurementModel, ConverterVoltageChannel) {
  const auto net = Network::five_bus();
  auto plan = MeteringPlan::default_plan(net);
  plan.scada.push_back({ChannelKind::ConverterVoltage, 0, true, NoiseClass::Magnitude, 1272.79});
  const StateLayout layout(net);
  const auto x = layout.pack(std::vector<BusState>(net.size()), 1800.0, 1.0);
  const auto h = h_eval(x, net, plan, VsiParams{});
  EXPECT_NEAR(h(static_cast<Eigen::Index>(plan.scada.size() - 1)), 1272.79, 5e-3);
}

TEST(MeasurementModel, FlatStateHasNoFlows) {
  const auto net = Network::five_bus();
  const auto plan = MeteringPlan::default_plan(net);
  const auto v = to_phasors(std::vector<BusState>(net.size()));
  const auto vals = scada_values(v, plan, net);
  for (std::size_t i = 0; i < plan.scada.size(); ++i) {
    const auto k = plan.scada[i].kind;
    if (k == ChannelKind::VMag || k == ChannelKind::VAng) continue;
    EXPECT_NEAR(vals[i], 0.0, 1e-12) << plan.scada[i].label(net);
  }
}

TEST(MeasurementModel, JacobianMatchesFiniteDifferences) {
  const auto net = Network::five_bus();
  auto plan = MeteringPlan::default_plan(net);
  plan.scada.push_back({ChannelKind::ConverterVoltage, 0, true, NoiseClass::Magnitude, 1272.79});
  VsiParams vsi;
  const StateLayout layout(net);
  std::vector<BusState> buses(net.size());
  for (std::size_t i = 0; i < buses.size(); ++i) buses[i] = {1.0 - 0.01 * i, -0.02 * i};
  const auto x = layout.pack(buses, 1790.0, 0.86);
  const auto jac = h_jacobian(x, net, plan, vsi);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = j == layout.vdc_slot() ? 1e-3 : 1e-6;
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Eigen::VectorXd fd = (h_eval(xp, net, plan, vsi) - h_eval(xm, net, plan, vsi)) / (2 * h);
    for (Eigen::Index i = 0; i < fd.size(); ++i)
      EXPECT_NEAR(jac(i, j), fd(i), 1e-5 * std::max(1.0, std::abs(fd(i)))) << i << "," << j;
  }
}
