// Current sign convention: positive current = discharge (battery delivers power).
#include "sfdia/battery.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfdia/error.hpp"

namespace sfdia::battery {

OcvCurve::OcvCurve(std::vector<double> soc, std::vector<double> volts) : soc_(std::move(soc)), volts_(std::move(volts)) {
  require(soc_.size() == volts_.size() && soc_.size() >= 2, ErrorCode::InvalidParameter,
          "OCV curve needs at least two matching points");
  require(soc_.front() <= 0.0 && soc_.back() >= 1.0, ErrorCode::InvalidParameter, "OCV curve must cover SoC [0, 1]");
  for (std::size_t k = 1; k < soc_.size(); ++k) {
    require(soc_[k] > soc_[k - 1], ErrorCode::InvalidParameter, "OCV SoC knots must be strictly increasing");
    require(volts_[k] > volts_[k - 1], ErrorCode::InvalidParameter, "OCV curve must be strictly increasing");
  }
}

std::size_t OcvCurve::segment(double soc) const {
  auto it = std::upper_bound(soc_.begin(), soc_.end(), soc);
  std::size_t k = it == soc_.begin() ? 0 : static_cast<std::size_t>(it - soc_.begin()) - 1;
  return std::min(k, soc_.size() - 2);
}

double OcvCurve::operator()(double soc) const {
  const std::size_t k = segment(soc);
  const double w = (soc - soc_[k]) / (soc_[k + 1] - soc_[k]);
  return volts_[k] + w * (volts_[k + 1] - volts_[k]);
}

double OcvCurve::slope(double soc) const {
  const std::size_t k = segment(soc);
  return (volts_[k + 1] - volts_[k]) / (soc_[k + 1] - soc_[k]);
}

OcvCurve OcvCurve::scaled(double factor) const {
  std::vector<double> v = volts_;
  for (double& x : v) x *= factor;
  return OcvCurve(soc_, std::move(v));
}

OcvCurve OcvCurve::default_cell() {
  // Plateau 0.15..0.35 has ~1/4 the slope of its neighbours. Pack (x492)
  // endpoints: 1608.8 V at empty, 2017.2 V at full.
  return OcvCurve({0.00, 0.05, 0.15, 0.35, 0.50, 0.70, 0.90, 1.00},
                  {3.270, 3.420, 3.530, 3.560, 3.660, 3.800, 3.970, 4.100});
}

void CellParams::validate() const {
  require(r0 > 0.0, ErrorCode::InvalidParameter, "cell r0 must be positive");
  require(ri > 0.0, ErrorCode::InvalidParameter, "cell ri must be positive");
  require(ci > 0.0, ErrorCode::InvalidParameter, "cell ci must be positive");
  require(capacity_ah > 0.0, ErrorCode::InvalidParameter, "cell capacity must be positive");
  require(ocv.soc_points().size() >= 2, ErrorCode::InvalidParameter, "cell OCV curve is empty");
}

PackParams build_pack(const CellParams& cell, int n_series, int n_parallel) {
  require(n_series >= 1 && n_parallel >= 1, ErrorCode::InvalidParameter,
          "pack counts must be >= 1 (got " + std::to_string(n_series) + "s x " + std::to_string(n_parallel) + "p)");
  cell.validate();
  const double ns = n_series;
  const double np = n_parallel;
  PackParams pack;
  pack.cell = cell;
  pack.n_series = n_series;
  pack.n_parallel = n_parallel;
  pack.r0 = cell.r0 * ns / np;
  pack.ri = cell.ri * ns / np;
  pack.ci = cell.ci * np / ns;
  pack.capacity_ah = cell.capacity_ah * np;
  pack.ocv = cell.ocv.scaled(ns);
  return pack;
}

PackParams reference_pack() { return build_pack(CellParams{}, 492, 98); }

double coulomb_update(double soc, double current, double dt, double capacity_ah) {
  return soc - current * dt / (3600.0 * capacity_ah);
}

BatteryState step_dynamics(const BatteryState& state, double current, double dt, const PackParams& pack) {
  require(dt > 0.0, ErrorCode::InvalidParameter, "dt must be positive");
  if (!pack.idc_range.contains(current)) {
    fail(ErrorCode::Range, "battery current " + std::to_string(current) + " A outside [" +
                               std::to_string(pack.idc_range.min) + ", " + std::to_string(pack.idc_range.max) + "]");
  }
  BatteryState next = state;
  const double raw = coulomb_update(state.soc, current, dt, pack.capacity_ah);
  next.soc = std::clamp(raw, 0.0, 1.0);
  next.saturated = raw != next.soc;
  // Exact discretisation of dv/dt = -v/tau + i/ci.
  const double a = std::exp(-dt / pack.time_constant());
  next.v_rc = a * state.v_rc + pack.ri * (1.0 - a) * current;
  next.clock = state.clock + dt;
  return next;
}

double terminal_voltage(const BatteryState& state, double current, const PackParams& pack) {
  return pack.ocv(state.soc) - current * pack.r0 - state.v_rc;
}

std::vector<double> coulomb_oracle(double soc0, std::span<const double> currents, double dt, const PackParams& pack) {
  std::vector<double> out;
  out.reserve(currents.size());
  double soc = soc0;
  for (double i : currents) {
    soc = std::clamp(coulomb_update(soc, i, dt, pack.capacity_ah), 0.0, 1.0);
    out.push_back(soc);
  }
  return out;
}

}  // namespace sfdia::battery
