#include "sfdia/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "sfdia/error.hpp"

namespace sfdia::config {

using nlohmann::json;

namespace {

// Reads fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    require(j.is_object(), ErrorCode::Config, "'" + name_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      fail(ErrorCode::Config, name_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) const { return j_.at(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      require(seen_.count(it.key()) > 0, ErrorCode::Config, "unknown key '" + name_ + "." + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json case_to_json(const attack::ScenarioSpec& s) {
  json j = {{"id", s.id}, {"t_s", s.t_s}, {"t_e", s.t_e}};
  if (s.target) {
    j["t_d"] = s.t_d;
    j["target"] = *s.target;
  }
  if (s.hold_until > 0.0) j["hold_until"] = s.hold_until;
  return j;
}

attack::ScenarioSpec case_from_json(const json& j, attack::Mode mode) {
  Section s(j, "case");
  attack::ScenarioSpec c;
  c.mode = mode;
  s.get("id", c.id);
  s.get("t_s", c.t_s);
  s.get("t_d", c.t_d);
  s.get("t_e", c.t_e);
  s.get("hold_until", c.hold_until);
  if (s.has("target") && !s.at("target").is_null()) {
    double t = 0.0;
    s.get("target", t);
    c.target = t;
  }
  s.finish();
  require(!c.id.empty(), ErrorCode::Config, "every case needs an id");
  return c;
}

attack::ScenarioSpec make_case(const std::string& id, double ts, double te, std::optional<double> target, double td,
                               attack::Mode mode) {
  attack::ScenarioSpec c;
  c.id = id;
  c.t_s = ts;
  c.t_e = te;
  c.t_d = target ? td : te;
  c.target = target;
  c.mode = mode;
  return c;
}

}  // namespace

std::vector<attack::ScenarioSpec> standard_case_grid(attack::Mode mode) {
  std::vector<attack::ScenarioSpec> out;
  int id = 1;
  for (double te : {25.0, 32.0})
    for (double ts : {2.0, 8.0, 16.0}) out.push_back(make_case("case" + std::to_string(id++), ts, te, {}, te, mode));
  struct Row {
    double ts, target;
  };
  const Row rows[] = {{2, 0.20}, {8, 0.20}, {16, 0.20}, {8, 0.10}, {8, 0.30}};
  for (auto [te, td] : {std::pair{25.0, 21.0}, std::pair{32.0, 25.0}})
    for (const auto& r : rows) out.push_back(make_case("case" + std::to_string(id++), r.ts, te, r.target, td, mode));
  return out;
}

attack::ScenarioSpec one_shot_kill_case() {
  auto c = make_case("kill", 30.0, 32.0, 0.10, 30.0 + 0.77 * 2.0, attack::Mode::Online);
  c.hold_until = 36.0;
  return c;
}

RunConfig fast_profile() {
  RunConfig c;
  c.profile = "fast";
  c.days = 4;
  c.train_days = 2;
  c.env.episode_steps = 120;
  c.env.target_choices = {0.10};
  c.env.skip_alarmed_windows = true;
  c.sac.hidden = {64, 64, 64};
  c.sac.gradient_steps = 4 * c.env.episode_steps;
  c.train_episodes = 2000;
  c.eval_episodes = 50;
  c.offline_cases = {make_case("fast1", 30.0, 32.0, 0.10, 30.0 + 0.77 * 2.0, attack::Mode::Offline),
                     make_case("fast2", 18.0, 20.0, 0.10, 18.0 + 0.77 * 2.0, attack::Mode::Offline)};
  c.online_cases = {one_shot_kill_case()};
  return c;
}

RunConfig full_profile() {
  RunConfig c;
  c.profile = "full";
  c.days = 20;
  c.train_days = 18;
  c.env.episode_steps = 600;
  c.env.target_choices = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
  c.env.skip_alarmed_windows = true;
  c.sac.hidden = {256, 256, 256};
  c.train_episodes = 9000;
  c.eval_episodes = 50;
  c.offline_cases = standard_case_grid(attack::Mode::Offline);
  c.online_cases = standard_case_grid(attack::Mode::Online);
  c.online_cases.push_back(one_shot_kill_case());
  return c;
}

RunConfig profile_by_name(const std::string& name) {
  if (name == "fast") return fast_profile();
  if (name == "full") return full_profile();
  fail(ErrorCode::Config, "unknown profile '" + name + "' (expected fast or full)");
}

void RunConfig::validate() const {
  require(days >= 2, ErrorCode::Config, "need at least 2 days (training plus held-out)");
  require(train_days >= 1 && train_days < days, ErrorCode::Config, "train_days must lie in [1, days)");
  require(calibration.fraction > 0.0 && calibration.fraction <= 1.0, ErrorCode::Config,
          "calibration fraction must lie in (0, 1]");
  require(calibration.soc_floor >= 0.0, ErrorCode::Config, "calibration SoC floor must be >= 0");
  require(train_episodes >= 0 && eval_episodes >= 0, ErrorCode::Config, "episode counts must be >= 0");
  require(eval_tolerance > 0.0, ErrorCode::Config, "eval tolerance must be positive");
  plant.validate();
  env.validate();
  sac.validate();
  const double window_h = 24.0 * test_days();
  for (const auto* cases : {&offline_cases, &online_cases}) {
    for (const auto& c : *cases) {
      c.validate();
      require(c.t_e <= window_h && c.hold_until <= window_h, ErrorCode::Config,
              "case '" + c.id + "' runs past the held-out window");
    }
  }
}

RunConfig from_json(const json& j) {
  Section top(j, "config");
  int version = -1;
  top.get("schema_version", version);
  require(version == kSchemaVersion, ErrorCode::Config,
          "unsupported schema_version " + std::to_string(version) + " (expected " + std::to_string(kSchemaVersion) + ")");
  std::string profile = "fast";
  top.get("profile", profile);
  RunConfig c = profile_by_name(profile);
  top.get("seed", c.seed);

  if (top.has("data")) {
    Section s(top.at("data"), "data");
    s.get("days", c.days);
    s.get("train_days", c.train_days);
    s.get("dt", c.plant.dt);
    s.get("command_every", c.plant.command_every);
    s.get("soc0", c.plant.soc0);
    s.get("v_set", c.plant.v_set);
    s.finish();
  }
  if (top.has("noise")) {
    Section s(top.at("noise"), "noise");
    s.get("sigma_mag", c.plant.noise.sigma_mag);
    s.get("sigma_phasor", c.plant.noise.sigma_phasor);
    s.get("sigma_power", c.plant.noise.sigma_power);
    s.finish();
  }
  if (top.has("ekf")) {
    Section s(top.at("ekf"), "ekf");
    s.get("q_soc", c.plant.ekf.q_soc);
    s.get("q_vrc", c.plant.ekf.q_vrc);
    s.get("r_meas", c.plant.ekf.r_meas);
    s.get("p0_soc", c.plant.ekf.p0_soc);
    s.get("p0_vrc", c.plant.ekf.p0_vrc);
    s.finish();
  }
  if (top.has("profiles")) {
    auto& p = c.plant.profiles;
    Section s(top.at("profiles"), "profiles");
    s.get("pv_peak_w", p.pv_peak_w);
    s.get("pv_center_h", p.pv_center_h);
    s.get("pv_width_h", p.pv_width_h);
    s.get("cloud_min", p.cloud_min);
    s.get("cloud_max", p.cloud_max);
    s.get("cloud_jitter", p.cloud_jitter);
    s.get("load_base_w", p.load_base_w);
    s.get("load_morning_w", p.load_morning_w);
    s.get("load_morning_h", p.load_morning_h);
    s.get("load_morning_width_h", p.load_morning_width_h);
    s.get("load_evening_w", p.load_evening_w);
    s.get("load_evening_h", p.load_evening_h);
    s.get("load_evening_width_h", p.load_evening_width_h);
    s.get("load_noise", p.load_noise);
    s.get("load_day_scale", p.load_day_scale);
    s.get("power_factor", p.power_factor);
    s.finish();
  }
  if (top.has("bems")) {
    auto& b = c.plant.bems;
    Section s(top.at("bems"), "bems");
    s.get("rating_w", b.rating_w);
    s.get("energy_wh", b.energy_wh);
    s.get("soc_min", b.soc_min);
    s.get("soc_max", b.soc_max);
    s.get("shed_margin", b.shed_margin);
    s.get("shed_fraction", b.shed_fraction);
    s.get("tracking_horizon_h", b.tracking_horizon_h);
    s.get("deadband", b.deadband);
    s.get("charge_limit", b.charge_limit);
    s.get("lookahead_s", b.lookahead_s);
    s.get("critical_start_h", b.critical_start_h);
    s.get("critical_end_h", b.critical_end_h);
    s.get("recharge_min_w", b.recharge_min_w);
    s.get("schedule", c.plant.schedule.anchors);
    s.finish();
  }
  if (top.has("calibration")) {
    Section s(top.at("calibration"), "calibration");
    s.get("fraction", c.calibration.fraction);
    s.get("soc_floor", c.calibration.soc_floor);
    s.finish();
  }
  if (top.has("env")) {
    auto& e = c.env;
    Section s(top.at("env"), "env");
    s.get("episode_steps", e.episode_steps);
    s.get("t_d_fraction", e.t_d_fraction);
    s.get("constrained", e.constrained);
    s.get("targets", e.target_choices);
    s.get("soc_bounds", e.soc_bounds);
    s.get("skip_alarmed_windows", e.skip_alarmed_windows);
    if (s.has("scale")) {
      Section t(s.at("scale"), "env.scale");
      t.get("v", e.scale.v);
      t.get("i", e.scale.i);
      t.finish();
    }
    if (s.has("reward")) {
      auto& r = e.reward;
      Section t(s.at("reward"), "env.reward");
      t.get("k_u1", r.k_u1);
      t.get("k_u2", r.k_u2);
      t.get("k_u3", r.k_u3);
      t.get("k_p", r.k_p);
      t.get("k_t1", r.k_t1);
      t.get("k_t2", r.k_t2);
      t.get("k_t3", r.k_t3);
      t.get("hit_window", r.hit_window);
      t.finish();
    }
    s.finish();
  }
  if (top.has("sac")) {
    auto& h = c.sac;
    Section s(top.at("sac"), "sac");
    s.get("lr", h.lr);
    s.get("gamma", h.gamma);
    s.get("batch", h.batch);
    s.get("target_tau", h.target_tau);
    s.get("alpha", h.alpha);
    s.get("buffer_capacity", h.buffer_capacity);
    s.get("hidden", h.hidden);
    s.get("gradient_steps", h.gradient_steps);
    s.get("warmup_episodes", h.warmup_episodes);
    s.get("episodes", c.train_episodes);
    s.get("eval_episodes", c.eval_episodes);
    s.get("eval_tolerance", c.eval_tolerance);
    s.finish();
  }
  if (top.has("campaign")) {
    Section s(top.at("campaign"), "campaign");
    for (auto [key, mode, dst] : {std::tuple{"offline", attack::Mode::Offline, &c.offline_cases},
                                  std::tuple{"online", attack::Mode::Online, &c.online_cases}}) {
      if (!s.has(key)) continue;
      const json& arr = s.at(key);
      if (arr.is_string()) {
        const auto name = arr.get<std::string>();
        require(name == "standard_grid", ErrorCode::Config, std::string("campaign.") + key + ": unknown case set '" + name + "'");
        *dst = standard_case_grid(mode);
        if (mode == attack::Mode::Online) dst->push_back(one_shot_kill_case());
        continue;
      }
      require(arr.is_array(), ErrorCode::Config, std::string("campaign.") + key + " must be an array or \"standard_grid\"");
      dst->clear();
      for (const auto& cj : arr) dst->push_back(case_from_json(cj, mode));
    }
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  const auto& p = c.plant.profiles;
  const auto& b = c.plant.bems;
  const auto& r = c.env.reward;
  json cases_off = json::array(), cases_on = json::array();
  for (const auto& x : c.offline_cases) cases_off.push_back(case_to_json(x));
  for (const auto& x : c.online_cases) cases_on.push_back(case_to_json(x));
  return {
      {"schema_version", kSchemaVersion},
      {"profile", c.profile},
      {"seed", c.seed},
      {"data",
       {{"days", c.days},
        {"train_days", c.train_days},
        {"dt", c.plant.dt},
        {"command_every", c.plant.command_every},
        {"soc0", c.plant.soc0},
        {"v_set", c.plant.v_set}}},
      {"noise",
       {{"sigma_mag", c.plant.noise.sigma_mag},
        {"sigma_phasor", c.plant.noise.sigma_phasor},
        {"sigma_power", c.plant.noise.sigma_power}}},
      {"ekf",
       {{"q_soc", c.plant.ekf.q_soc},
        {"q_vrc", c.plant.ekf.q_vrc},
        {"r_meas", c.plant.ekf.r_meas},
        {"p0_soc", c.plant.ekf.p0_soc},
        {"p0_vrc", c.plant.ekf.p0_vrc}}},
      {"profiles",
       {{"pv_peak_w", p.pv_peak_w},
        {"pv_center_h", p.pv_center_h},
        {"pv_width_h", p.pv_width_h},
        {"cloud_min", p.cloud_min},
        {"cloud_max", p.cloud_max},
        {"cloud_jitter", p.cloud_jitter},
        {"load_base_w", p.load_base_w},
        {"load_morning_w", p.load_morning_w},
        {"load_morning_h", p.load_morning_h},
        {"load_morning_width_h", p.load_morning_width_h},
        {"load_evening_w", p.load_evening_w},
        {"load_evening_h", p.load_evening_h},
        {"load_evening_width_h", p.load_evening_width_h},
        {"load_noise", p.load_noise},
        {"load_day_scale", p.load_day_scale},
        {"power_factor", p.power_factor}}},
      {"bems",
       {{"rating_w", b.rating_w},
        {"energy_wh", b.energy_wh},
        {"soc_min", b.soc_min},
        {"soc_max", b.soc_max},
        {"shed_margin", b.shed_margin},
        {"shed_fraction", b.shed_fraction},
        {"tracking_horizon_h", b.tracking_horizon_h},
        {"deadband", b.deadband},
        {"charge_limit", b.charge_limit},
        {"lookahead_s", b.lookahead_s},
        {"critical_start_h", b.critical_start_h},
        {"critical_end_h", b.critical_end_h},
        {"recharge_min_w", b.recharge_min_w},
        {"schedule", c.plant.schedule.anchors}}},
      {"calibration", {{"fraction", c.calibration.fraction}, {"soc_floor", c.calibration.soc_floor}}},
      {"env",
       {{"episode_steps", c.env.episode_steps},
        {"t_d_fraction", c.env.t_d_fraction},
        {"constrained", c.env.constrained},
        {"targets", c.env.target_choices},
        {"soc_bounds", c.env.soc_bounds},
        {"skip_alarmed_windows", c.env.skip_alarmed_windows},
        {"scale", {{"v", c.env.scale.v}, {"i", c.env.scale.i}}},
        {"reward",
         {{"k_u1", r.k_u1},
          {"k_u2", r.k_u2},
          {"k_u3", r.k_u3},
          {"k_p", r.k_p},
          {"k_t1", r.k_t1},
          {"k_t2", r.k_t2},
          {"k_t3", r.k_t3},
          {"hit_window", r.hit_window}}}}},
      {"sac",
       {{"lr", c.sac.lr},
        {"gamma", c.sac.gamma},
        {"batch", c.sac.batch},
        {"target_tau", c.sac.target_tau},
        {"alpha", c.sac.alpha},
        {"buffer_capacity", c.sac.buffer_capacity},
        {"hidden", c.sac.hidden},
        {"gradient_steps", c.sac.gradient_steps},
        {"warmup_episodes", c.sac.warmup_episodes},
        {"episodes", c.train_episodes},
        {"eval_episodes", c.eval_episodes},
        {"eval_tolerance", c.eval_tolerance}}},
      {"campaign", {{"offline", cases_off}, {"online", cases_on}}},
  };
}

RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void save(const RunConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write config '" + path + "'");
  out << to_json(c).dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for '" + path + "'");
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

}  // namespace sfdia::config
