// Current sign convention: BESS i_dc positive = discharge; powers in W,
// generation positive at the buses.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sfdia/battery.hpp"
#include "sfdia/bems.hpp"
#include "sfdia/ekf.hpp"
#include "sfdia/measurement.hpp"
#include "sfdia/network.hpp"

namespace sfdia::plant {

/// Synthetic diurnal PV (bell-shaped irradiance times a cloud factor) and a
/// residential double-peak load.
struct ProfileParams {
  double pv_peak_w = 4.5e6;
  double pv_center_h = 12.5;
  double pv_width_h = 2.5;
  double cloud_min = 0.75;
  double cloud_max = 1.0;
  double cloud_jitter = 0.03;
  double load_base_w = 0.40e6;
  double load_morning_w = 0.15e6;
  double load_morning_h = 7.5;
  double load_morning_width_h = 1.0;
  double load_evening_w = 0.65e6;
  double load_evening_h = 19.5;
  double load_evening_width_h = 2.5;
  double load_noise = 0.03;     // relative, per minute
  double load_day_scale = 0.05; // relative std of the daily level
  double power_factor = 0.95;

  void validate() const;
};

class Profiles {
 public:
  Profiles() = default;
  Profiles(const ProfileParams& params, int days, double dt, std::uint64_t seed);
  /// Explicit series whose first entry belongs to step first_step.
  Profiles(std::vector<double> pv_w, std::vector<double> load_w, long first_step = 0);

  double pv(long step) const { return pv_.at(static_cast<std::size_t>(step - first_)); }
  double load(long step) const { return load_.at(static_cast<std::size_t>(step - first_)); }
  long first_step() const { return first_; }
  /// One past the last covered step.
  long end_step() const { return first_ + static_cast<long>(pv_.size()); }

 private:
  std::vector<double> pv_;
  std::vector<double> load_;
  long first_ = 0;
};

struct PlantConfig {
  grid::Network net = grid::Network::five_bus();
  battery::PackParams pack = battery::reference_pack();
  grid::VsiParams vsi;
  grid::MeteringPlan plan = grid::MeteringPlan::default_plan(grid::Network::five_bus());
  grid::NoiseSpec noise;
  bems::BemsParams bems;
  bems::SocSchedule schedule = bems::SocSchedule::defaults();
  ProfileParams profiles;
  estimation::EkfNoise ekf;
  double dt = 60.0;
  int command_every = 15;  // steps between dispatch commands
  double v_set = 1.0;      // grid-forming voltage setpoint, p.u.
  double soc0 = 0.45;

  void validate() const;
  long steps_per_day() const { return static_cast<long>(86400.0 / dt + 0.5); }
};

/// Everything needed to resume the plant at the start of a step.
struct PlantSnapshot {
  long step = 0;
  battery::BatteryState battery;
  estimation::EkfState bms_ekf;
  bems::DispatchCommand command;
  double last_reported_soc = 0.0;
  bool shutdown = false;
};

struct PlantSample {
  long step = 0;
  double timestamp = 0.0;  // end of the step, s
  grid::MeasurementSet z;  // noisy telemetry as received
  grid::BessTelemetry truth;
  battery::BatteryState battery;  // after the step
  double pv_avail_w = 0.0;
  double load_w = 0.0;
  double pv_used_w = 0.0;
  double load_served_w = 0.0;
  bems::DispatchCommand command;
  bems::ShutdownCheck shutdown;
  std::vector<grid::BusState> buses;
};

/// Islanded feeder with the BESS as grid-forming slack. Telemetry noise for a
/// step is drawn from a stream keyed on (seed, step), so a plant restored from
/// a snapshot reproduces the original run exactly.
class Plant {
 public:
  Plant(PlantConfig config, Profiles profiles, std::uint64_t seed);

  void reset(double soc0, long step = 0);
  void restore(const PlantSnapshot& snapshot) { snap_ = snapshot; }
  const PlantSnapshot& snapshot() const { return snap_; }
  const PlantConfig& config() const { return config_; }
  const Profiles& profiles() const { return profiles_; }

  /// On command steps the BEMS sees soc_for_bems, or the last SoC the BMS
  /// reported when none is given.
  PlantSample step(std::optional<double> soc_for_bems = std::nullopt);

 private:
  PlantConfig config_;
  Profiles profiles_;
  std::uint64_t seed_;
  PlantSnapshot snap_;
  Eigen::MatrixXcd ybus_;
};

std::mt19937_64 step_rng(std::uint64_t seed, long step);

}  // namespace sfdia::plant
