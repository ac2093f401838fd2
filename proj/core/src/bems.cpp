// Power sign convention: BESS setpoint positive = discharge.
#include "sfdia/bems.hpp"

#include <algorithm>
#include <cmath>

#include "sfdia/error.hpp"

namespace sfdia::bems {

void SocSchedule::validate() const {
  require(anchors.size() >= 2, ErrorCode::Config, "SoC schedule needs at least two anchors");
  require(anchors.front().first <= 0.0 && anchors.back().first >= 24.0, ErrorCode::Config,
          "SoC schedule must span hours 0 to 24");
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    require(anchors[k].second >= 0.20 && anchors[k].second <= 0.90, ErrorCode::Config,
            "SoC schedule targets must lie in [0.20, 0.90]");
    if (k > 0)
      require(anchors[k].first > anchors[k - 1].first, ErrorCode::Config, "SoC schedule hours must increase");
  }
}

SocSchedule SocSchedule::defaults() { return {{{0.0, 0.45}, {8.0, 0.22}, {12.0, 0.22}, {15.0, 0.80}, {18.0, 0.90}, {24.0, 0.45}}}; }

void BemsParams::validate() const {
  require(rating_w > 0.0 && energy_wh > 0.0, ErrorCode::Config, "BEMS ratings must be positive");
  require(soc_min >= 0.0 && soc_min < soc_max && soc_max <= 1.0, ErrorCode::Config, "BEMS SoC band must be ordered");
  require(shed_fraction >= 0.0 && shed_fraction <= 1.0, ErrorCode::Config, "shed fraction must lie in [0, 1]");
  require(tracking_horizon_h > 0.0 && deadband >= 0.0, ErrorCode::Config, "invalid tracking parameters");
  require(critical_start_h < critical_end_h, ErrorCode::Config, "critical window must be ordered");
}

double hour_of_day(double clock_s) {
  const double h = std::fmod(clock_s / 3600.0, 24.0);
  return h < 0.0 ? h + 24.0 : h;
}

double soc_reference(double clock_s, const SocSchedule& schedule) {
  const double h = hour_of_day(clock_s);
  const auto& a = schedule.anchors;
  auto it = std::upper_bound(a.begin(), a.end(), h, [](double x, const auto& p) { return x < p.first; });
  if (it == a.begin()) return a.front().second;
  if (it == a.end()) return a.back().second;
  const auto& lo = *(it - 1);
  const auto& hi = *it;
  return lo.second + (h - lo.first) / (hi.first - lo.first) * (hi.second - lo.second);
}

double served_load(const DispatchCommand& cmd, double load_w, const BemsParams& params) {
  return cmd.shed_noncritical ? load_w * (1.0 - params.shed_fraction) : load_w;
}

double pv_used(const DispatchCommand& cmd, double pv_avail_w) { return pv_avail_w * (1.0 - cmd.pv_curtailment); }

DispatchCommand dispatch(double soc_reported, double pv_avail_w, double load_w, double clock_s,
                         const BemsParams& params, const SocSchedule& schedule) {
  DispatchCommand cmd;
  cmd.issued_at = clock_s;
  pv_avail_w = std::max(pv_avail_w, 0.0);
  load_w = std::max(load_w, 0.0);

  cmd.shed_noncritical = soc_reported <= params.soc_min + params.shed_margin && pv_avail_w < load_w;
  const double served = served_load(cmd, load_w, params);

  // Above the reference band: withhold PV so the battery discharges toward
  // it. Otherwise take all PV the charge limit allows.
  const double error = soc_reported - soc_reference(clock_s + params.lookahead_s, schedule);
  double used = std::min(pv_avail_w, served + params.charge_limit * params.rating_w);
  if (error > params.deadband) {
    const double p_des = (error - params.deadband) * params.energy_wh / params.tracking_horizon_h;
    used = std::clamp(served - p_des, 0.0, pv_avail_w);
  }
  if (soc_reported >= params.soc_max) used = std::min(used, served);

  cmd.pv_curtailment = pv_avail_w > 0.0 ? std::clamp(1.0 - used / pv_avail_w, 0.0, 1.0) : 0.0;
  cmd.bess_power_setpoint = std::clamp(served - used, -params.rating_w, params.rating_w);
  return cmd;
}

ShutdownCheck check_shutdown(double soc_true, double pv_avail_w, double clock_s, double critical_load_w,
                             const BemsParams& params) {
  if (soc_true >= params.soc_min) return {};
  const double h = hour_of_day(clock_s);
  const bool critical = h >= params.critical_start_h && h < params.critical_end_h;
  const double margin = critical ? 0.0 : pv_avail_w - critical_load_w;
  if (margin >= params.recharge_min_w) return {};
  return {true, critical ? "SoC below minimum inside the critical window" : "SoC below minimum without PV margin"};
}

}  // namespace sfdia::bems
