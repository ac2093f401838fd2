// Power sign convention: BESS setpoint positive = discharge.
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace sfdia::bems {

/// Hour-of-day anchors of the reference SoC trajectory, linearly interpolated.
struct SocSchedule {
  std::vector<std::pair<double, double>> anchors;

  void validate() const;
  static SocSchedule defaults();
};

struct BemsParams {
  double rating_w = 3e6;
  double energy_wh = 12e6;
  double soc_min = 0.20;
  double soc_max = 0.90;
  double shed_margin = 0.03;     // shed when reported SoC <= soc_min + margin
  double shed_fraction = 0.6;    // non-critical share of load
  double tracking_horizon_h = 0.25;
  double deadband = 0.02;
  double charge_limit = 0.75;  // of rating; leaves headroom for PV swings between commands
  double lookahead_s = 900.0;
  double critical_start_h = 8.0;
  double critical_end_h = 12.0;
  double recharge_min_w = 50e3;  // PV margin needed to start recharging

  void validate() const;
};

struct DispatchCommand {
  double bess_power_setpoint = 0.0;  // W
  double pv_curtailment = 0.0;       // fraction of available PV withheld
  bool shed_noncritical = false;
  double issued_at = 0.0;            // s
};

double hour_of_day(double clock_s);

double soc_reference(double clock_s, const SocSchedule& schedule);

/// Rule-based dispatch from the reported SoC. The BESS balances the islanded
/// feeder, so the command acts through PV curtailment and load shedding; the
/// setpoint is the resulting battery power.
DispatchCommand dispatch(double soc_reported, double pv_avail_w, double load_w, double clock_s,
                         const BemsParams& params, const SocSchedule& schedule);

/// Load actually served under a command.
double served_load(const DispatchCommand& cmd, double load_w, const BemsParams& params);
double pv_used(const DispatchCommand& cmd, double pv_avail_w);

struct ShutdownCheck {
  bool shutdown = false;
  std::string reason;
};

/// Uses the true SoC. Inside the critical window PV is committed to the load,
/// so no margin is left for recharging the battery.
ShutdownCheck check_shutdown(double soc_true, double pv_avail_w, double clock_s, double critical_load_w,
                             const BemsParams& params);

}  // namespace sfdia::bems
