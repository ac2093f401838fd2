// Current sign convention: BESS i_dc positive = discharge.
#include "sfdia/plant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sfdia/error.hpp"
#include "sfdia/power_flow.hpp"

namespace sfdia::plant {

namespace {

double bell(double h, double center, double width) {
  const double d = (h - center) / width;
  return std::exp(-0.5 * d * d);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::mt19937_64 step_rng(std::uint64_t seed, long step) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(step)));
}

void ProfileParams::validate() const {
  require(pv_peak_w >= 0.0 && pv_width_h > 0.0, ErrorCode::Config, "invalid PV profile");
  require(cloud_min >= 0.0 && cloud_min <= cloud_max && cloud_max <= 1.0, ErrorCode::Config,
          "cloud factors must satisfy 0 <= min <= max <= 1");
  require(load_base_w >= 0.0 && load_noise >= 0.0 && load_day_scale >= 0.0, ErrorCode::Config, "invalid load profile");
  require(power_factor > 0.0 && power_factor <= 1.0, ErrorCode::Config, "power factor must lie in (0, 1]");
}

Profiles::Profiles(const ProfileParams& p, int days, double dt, std::uint64_t seed) {
  p.validate();
  require(days >= 1, ErrorCode::InvalidParameter, "profile needs at least one day");
  const long per_day = static_cast<long>(86400.0 / dt + 0.5);
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedULL));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  pv_.reserve(static_cast<std::size_t>(days * per_day));
  load_.reserve(pv_.capacity());
  for (int d = 0; d < days; ++d) {
    const double level = p.cloud_min + (p.cloud_max - p.cloud_min) * uni(rng);
    const double scale = std::max(0.5, 1.0 + p.load_day_scale * gauss(rng));
    double cloud = level;
    for (long k = 0; k < per_day; ++k) {
      const double h = (static_cast<double>(k) + 0.5) * dt / 3600.0;
      // Mean-reverting jitter around the day's cloudiness.
      cloud += 0.1 * (level - cloud) + p.cloud_jitter * gauss(rng);
      cloud = std::clamp(cloud, p.cloud_min, p.cloud_max);
      const double irr = bell(h, p.pv_center_h, p.pv_width_h);
      pv_.push_back(irr < 1e-3 ? 0.0 : p.pv_peak_w * irr * cloud);
      const double shape = p.load_base_w + p.load_morning_w * bell(h, p.load_morning_h, p.load_morning_width_h) +
                           p.load_evening_w * bell(h, p.load_evening_h, p.load_evening_width_h);
      load_.push_back(std::max(0.0, shape * scale * (1.0 + p.load_noise * gauss(rng))));
    }
  }
}

Profiles::Profiles(std::vector<double> pv_w, std::vector<double> load_w, long first_step)
    : pv_(std::move(pv_w)), load_(std::move(load_w)), first_(first_step) {
  require(pv_.size() == load_.size(), ErrorCode::InvalidParameter, "PV and load profiles differ in length");
}

void PlantConfig::validate() const {
  net.validate();
  vsi.validate();
  noise.validate();
  bems.validate();
  schedule.validate();
  profiles.validate();
  ekf.validate();
  require(dt > 0.0 && command_every >= 1, ErrorCode::Config, "invalid plant cadence");
  require(net.slack_index() == net.bess_index(), ErrorCode::Config, "the BESS bus must be the grid-forming slack");
  require(net.pv_index() >= 0 && net.load_index() >= 0, ErrorCode::Config, "network needs a PV farm and a load bus");
  require(soc0 >= 0.0 && soc0 <= 1.0, ErrorCode::Config, "initial SoC must lie in [0, 1]");
}

Plant::Plant(PlantConfig config, Profiles profiles, std::uint64_t seed)
    : config_(std::move(config)), profiles_(std::move(profiles)), seed_(seed) {
  config_.validate();
  ybus_ = config_.net.admittance();
  reset(config_.soc0);
}

void Plant::reset(double soc0, long step) {
  snap_ = {};
  snap_.step = step;
  snap_.battery.soc = soc0;
  snap_.battery.clock = static_cast<double>(step) * config_.dt;
  snap_.bms_ekf = estimation::ekf_init(soc0, config_.pack, config_.ekf);
  snap_.last_reported_soc = soc0;
}

PlantSample Plant::step(std::optional<double> soc_for_bems) {
  const long k = snap_.step;
  require(k >= profiles_.first_step() && k < profiles_.end_step(), ErrorCode::Contract, "plant stepped past the end of its profiles");
  const auto& cfg = config_;
  const double clock = static_cast<double>(k) * cfg.dt;

  PlantSample s;
  s.step = k;
  s.timestamp = clock + cfg.dt;
  s.pv_avail_w = profiles_.pv(k);
  s.load_w = profiles_.load(k);
  if (k % cfg.command_every == 0)
    snap_.command = bems::dispatch(soc_for_bems.value_or(snap_.last_reported_soc), s.pv_avail_w, s.load_w, clock,
                                   cfg.bems, cfg.schedule);
  s.command = snap_.command;
  s.pv_used_w = bems::pv_used(s.command, s.pv_avail_w);
  s.load_served_w = bems::served_load(s.command, s.load_w, cfg.bems);

  const double sb = cfg.net.base_mva * 1e6;
  const double tan_phi = std::tan(std::acos(cfg.profiles.power_factor));
  std::vector<grid::Complex> inj(cfg.net.size(), grid::Complex(0.0));
  inj[cfg.net.pv_index()] += grid::Complex(s.pv_used_w / sb, 0.0);
  inj[cfg.net.load_index()] -= grid::Complex(s.load_served_w / sb, s.load_served_w * tan_phi / sb);
  grid::Network net = cfg.net;
  net.slack_voltage = cfg.v_set;
  const auto pf = grid::solve_power_flow(net, inj);
  s.buses = pf.buses;

  const int b = cfg.net.slack_index();
  const Eigen::VectorXcd v = grid::to_phasors(pf.buses);
  const grid::Complex ib = (ybus_.row(b) * v)(0);
  const double p_ac = (v(b) * std::conj(ib)).real() * sb;
  const double i_ri = std::abs(ib) * sb / (std::numbers::sqrt3 * cfg.vsi.ac_base_volts);
  const double ac_loss = i_ri * i_ri * cfg.vsi.r_ac;

  // DC current and end-of-step terminal voltage are mutually dependent.
  double i_dc = 0.0;
  double v_dc = battery::terminal_voltage(snap_.battery, 0.0, cfg.pack);
  battery::BatteryState next;
  for (int it = 0; it < 8; ++it) {
    i_dc = (p_ac + ac_loss + v_dc * v_dc / cfg.vsi.r_dc) / v_dc;
    next = battery::step_dynamics(snap_.battery, i_dc, cfg.dt, cfg.pack);
    v_dc = battery::terminal_voltage(next, i_dc, cfg.pack);
  }
  const double m = std::numbers::sqrt2 * cfg.vsi.ac_base_volts * cfg.v_set / v_dc;

  const auto bms = estimation::ekf_step(snap_.bms_ekf, v_dc, i_dc, cfg.dt, cfg.pack);
  s.truth = {v_dc, i_dc, m, bms.soc_hat};
  s.battery = next;
  auto rng = step_rng(seed_, k);
  s.z = grid::synthesize_measurements(pf.buses, s.truth, cfg.plan, cfg.net, cfg.noise, rng, s.timestamp);

  const double critical = s.load_w * (1.0 - cfg.bems.shed_fraction);
  s.shutdown = bems::check_shutdown(next.soc, s.pv_avail_w, s.timestamp, critical, cfg.bems);

  snap_.battery = next;
  snap_.bms_ekf = bms.state;
  snap_.last_reported_soc = bms.soc_hat;
  snap_.shutdown = snap_.shutdown || s.shutdown.shutdown;
  snap_.step = k + 1;
  return s;
}

}  // namespace sfdia::plant
