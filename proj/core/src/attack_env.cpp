// Current sign convention: BESS i_dc positive = discharge.
#include "sfdia/attack_env.hpp"

#include <algorithm>
#include <cmath>

#include "sfdia/error.hpp"

namespace sfdia::attack {

namespace {

double clip(double a, double lim, bool& clipped) {
  if (!std::isfinite(a)) {
    clipped = true;
    return 0.0;
  }
  const double c = std::clamp(a, -lim, lim);
  clipped = clipped || c != a;
  return c;
}

}  // namespace

void ScenarioSpec::validate() const {
  require(t_s >= 0.0 && t_s < t_e, ErrorCode::Config, "scenario '" + id + "' needs 0 <= t_s < t_e");
  if (target) {
    require(*target != 0.0, ErrorCode::Config, "scenario '" + id + "' has a zero target");
    require(t_d > t_s && t_d <= t_e, ErrorCode::Config, "scenario '" + id + "' needs t_s < t_d <= t_e");
  }
}

void EnvConfig::validate() const {
  require(episode_steps >= 1, ErrorCode::Config, "episode needs at least one step");
  require(t_d_fraction > 0.0 && t_d_fraction <= 1.0, ErrorCode::Config, "t_d fraction must lie in (0, 1]");
  require(!constrained || !target_choices.empty(), ErrorCode::Config, "constrained training needs target choices");
  for (double t : target_choices) require(t != 0.0, ErrorCode::Config, "targets must be nonzero");
  require(scale.v > 0.0 && scale.i > 0.0, ErrorCode::Config, "action scale must be positive");
  reward.validate();
}

bdd::DetectorModel make_detector(const plant::PlantConfig& config) {
  bdd::DetectorModel m;
  m.net = config.net;
  m.plan = config.plan;
  m.vsi = config.vsi;
  m.weights = grid::channel_weights(config.plan, config.noise);
  m.wls.v_dc_nominal = config.pack.nominal_voltage;
  m.pack = config.pack;
  m.dt = config.dt;
  return m;
}

std::vector<estimation::EkfState> replay_cc_beliefs(const plant::PlantConfig& config, const plant::Dataset& ds) {
  require(!ds.rows.empty(), ErrorCode::InvalidParameter, "empty dataset");
  std::vector<estimation::EkfState> out;
  out.reserve(ds.rows.size());
  auto ekf = estimation::ekf_init(ds.rows.front().start.last_reported_soc, config.pack, config.ekf);
  for (const auto& r : ds.rows) {
    out.push_back(ekf);
    ekf = estimation::ekf_step(ekf, r.sample.z.bess.v_dc, r.sample.z.bess.i_dc, config.dt, config.pack).state;
  }
  return out;
}

EnvContext EnvContext::build(const plant::PlantConfig& config, std::shared_ptr<const plant::Dataset> dataset,
                             const bdd::Thresholds& thresholds) {
  require(dataset != nullptr, ErrorCode::InvalidParameter, "environment needs a dataset");
  thresholds.validate();
  EnvContext ctx;
  ctx.plant = config;
  ctx.thresholds = thresholds;
  ctx.detector = make_detector(config);
  ctx.cc_belief = replay_cc_beliefs(config, *dataset);
  auto th = thresholds;
  th.bounds.soc_enabled = false;
  ctx.clean_alarm.resize(dataset->size());
  for (std::size_t k = 0; k < dataset->size(); ++k)
    ctx.clean_alarm[k] = !bdd::detect(dataset->rows[k].sample.z, ctx.detector, th, ctx.cc_belief[k]).verdict.pass;
  ctx.dataset = std::move(dataset);
  return ctx;
}

AttackEnv::AttackEnv(std::shared_ptr<const EnvContext> ctx, EnvConfig config)
    : ctx_(std::move(ctx)), config_(std::move(config)) {
  require(ctx_ != nullptr, ErrorCode::InvalidParameter, "environment needs a context");
  config_.validate();
  thresholds_ = ctx_->thresholds;
  thresholds_.bounds.soc_enabled = config_.soc_bounds;
  transcript_.reason = TerminalReason::Completed;
}

int AttackEnv::state_dim() const {
  return static_cast<int>(ctx_->plant.plan.scada.size()) + 3 + 2 + 1 + 1 + (config_.constrained ? 1 : 0);
}

Eigen::VectorXd AttackEnv::reset(std::mt19937_64& rng) {
  const long n = static_cast<long>(ctx_->dataset->size());
  const int steps = config_.episode_steps;
  require(n >= steps, ErrorCode::InvalidParameter, "dataset shorter than one episode");
  long row = 0;
  if (config_.skip_alarmed_windows) {
    const auto& alarm = ctx_->clean_alarm;
    std::vector<long> starts;
    long bad = 0;
    for (long k = 0; k < steps; ++k) bad += alarm[static_cast<std::size_t>(k)];
    for (long s = 0;; ++s) {
      if (bad == 0) starts.push_back(s);
      if (s + steps >= n) break;
      bad += alarm[static_cast<std::size_t>(s + steps)] - alarm[static_cast<std::size_t>(s)];
    }
    require(!starts.empty(), ErrorCode::InvalidParameter, "every window of the dataset contains a clean alarm");
    std::uniform_int_distribution<std::size_t> pick(0, starts.size() - 1);
    row = starts[pick(rng)];
  } else {
    std::uniform_int_distribution<long> start(0, n - steps);
    row = start(rng);
  }
  std::optional<double> target;
  if (config_.constrained) {
    std::uniform_int_distribution<std::size_t> pick(0, config_.target_choices.size() - 1);
    target = config_.target_choices[pick(rng)];
  }
  const int t_d = std::max(1, static_cast<int>(std::lround(config_.t_d_fraction * steps)));
  return reset(row, steps, t_d, target);
}

Eigen::VectorXd AttackEnv::reset(const ScenarioSpec& spec) {
  spec.validate();
  const double per_hour = 3600.0 / ctx_->plant.dt;
  const long row = std::lround(spec.t_s * per_hour);
  const int steps = static_cast<int>(std::lround((spec.t_e - spec.t_s) * per_hour));
  const int t_d = spec.target ? static_cast<int>(std::lround((spec.t_d - spec.t_s) * per_hour)) : steps;
  const int hold = spec.mode == Mode::Online && spec.hold_until > spec.t_e
                       ? static_cast<int>(std::lround((spec.hold_until - spec.t_e) * per_hour))
                       : 0;
  config_.mode = spec.mode;
  config_.constrained = spec.target.has_value();
  return reset(row, steps, t_d, spec.target, hold, spec.id);
}

Eigen::VectorXd AttackEnv::reset(long start_row, int steps, int t_d, std::optional<double> target, int hold_steps,
                                 std::string case_id) {
  const auto& ds = *ctx_->dataset;
  require(steps >= 1 && hold_steps >= 0, ErrorCode::InvalidParameter, "episode needs at least one step");
  if (start_row < 0 || start_row + steps + hold_steps > static_cast<long>(ds.size()))
    fail(ErrorCode::InvalidParameter, "attack window [" + std::to_string(start_row) + ", " +
                                          std::to_string(start_row + steps + hold_steps) +
                                          ") does not fit the dataset of " + std::to_string(ds.size()) + " rows");
  require(config_.constrained == target.has_value(), ErrorCode::InvalidParameter,
          "target must be present exactly for constrained attacks");
  require(!target || *target != 0.0, ErrorCode::InvalidParameter, "constrained attack needs a nonzero target");

  t_ = 0;
  attack_ = {};
  ekf_fake_ = ekf_actual_ = ekf_cc_ = ctx_->cc_belief.at(static_cast<std::size_t>(start_row));
  transcript_ = {};
  transcript_.case_id = std::move(case_id);
  transcript_.start_row = start_row;
  transcript_.steps = steps;
  transcript_.t_d = t_d;
  transcript_.hold_steps = hold_steps;
  transcript_.target = target;
  transcript_.mode = config_.mode;
  transcript_.reason = TerminalReason::Running;
  transcript_.records.reserve(static_cast<std::size_t>(steps + hold_steps));

  const auto& start = ds.rows[static_cast<std::size_t>(start_row)].start;
  last_reported_soc_ = start.last_reported_soc;
  if (config_.mode == Mode::Online) {
    plant_ = std::make_unique<plant::Plant>(ctx_->plant, ds.profiles(), ds.seed);
    plant_->restore(start);
  } else {
    plant_.reset();
  }
  pending_ = next_clean();
  return observe();
}

grid::MeasurementSet AttackEnv::next_clean() {
  if (plant_) {
    const auto s = plant_->step(last_reported_soc_);
    pending_true_soc_ = s.battery.soc;
    pending_shutdown_ = s.shutdown.shutdown;
    return s.z;
  }
  const auto& row = ctx_->dataset->rows[static_cast<std::size_t>(transcript_.start_row + t_)];
  pending_true_soc_ = row.sample.battery.soc;
  pending_shutdown_ = row.sample.shutdown.shutdown;
  return row.sample.z;
}

Eigen::VectorXd AttackEnv::observe() const {
  Eigen::VectorXd s(state_dim());
  Eigen::Index k = 0;
  for (double v : pending_.scada) s(k++) = v;
  s(k++) = (pending_.bess.v_dc - 1800.0) / 200.0;
  s(k++) = pending_.bess.i_dc / 1667.0;
  s(k++) = (pending_.bess.mod_index - 0.85) / 0.05;
  s(k++) = attack_.cum_dv / 50.0;
  s(k++) = attack_.cum_di / 50.0;
  s(k++) = attack_.soc_bias * 10.0;
  s(k++) = static_cast<double>(t_ + 1) / transcript_.steps;
  if (config_.constrained) s(k++) = transcript_.target.value_or(0.0) * 10.0;
  return s;
}

StepResult AttackEnv::step(const Eigen::Vector2d& action) {
  require(transcript_.reason == TerminalReason::Running, ErrorCode::Contract, "step() on a finished episode");
  const auto& ctx = *ctx_;
  ++t_;
  const int T = transcript_.steps;
  const bool attacking = t_ <= T;

  StepRecord rec;
  rec.t = t_;
  rec.row = transcript_.start_row + t_ - 1;
  rec.attack = attack_;
  rec.attack.dv_step = attacking ? clip(action(0), config_.scale.v, rec.clipped) : 0.0;
  rec.attack.di_step = attacking ? clip(action(1), config_.scale.i, rec.clipped) : 0.0;
  rec.attack.cum_dv += rec.attack.dv_step;
  rec.attack.cum_di += rec.attack.di_step;

  const grid::MeasurementSet clean = pending_;
  rec.clean_v_dc = clean.bess.v_dc;
  rec.clean_i_dc = clean.bess.i_dc;
  grid::MeasurementSet z = clean;
  z.provenance = grid::Provenance::Falsified;
  z.bess.v_dc += rec.attack.cum_dv;
  z.bess.i_dc += rec.attack.cum_di;

  ekf_fake_ = estimation::ekf_step(ekf_fake_, z.bess.v_dc, z.bess.i_dc, ctx.plant.dt, ctx.plant.pack).state;
  ekf_actual_ = estimation::ekf_step(ekf_actual_, clean.bess.v_dc, clean.bess.i_dc, ctx.plant.dt, ctx.plant.pack).state;
  rec.fake_soc = ekf_fake_.soc_hat();
  rec.actual_soc = ekf_actual_.soc_hat();
  rec.attack.soc_bias = rec.fake_soc - rec.actual_soc;
  // The BMS stream is shifted by the induced error, so a zero bias leaves it untouched.
  z.bess.soc = std::clamp(clean.bess.soc + rec.attack.soc_bias, 0.0, 1.0);
  rec.true_soc = pending_true_soc_;
  rec.shutdown = pending_shutdown_;

  const auto det = bdd::detect(z, ctx.detector, thresholds_, ekf_cc_);
  ekf_cc_ = det.ekf_cc;
  rec.verdict = det.verdict;
  rec.z = z;

  const int f = det.verdict.f_bdd();
  if (attacking) {
    const double dphi = 100.0 * rec.attack.soc_bias;
    rec.reward = transcript_.target
                     ? reward_constrained(dphi, 100.0 * *transcript_.target, t_, transcript_.t_d, T, f, config_.reward)
                     : reward_unconstrained(dphi, t_, T, f, config_.reward);
  } else {
    rec.reward = config_.reward.k_p * f;
  }

  attack_ = rec.attack;
  last_reported_soc_ = z.bess.soc;
  StepResult out;
  out.reward = rec.reward;
  out.verdict = rec.verdict;
  transcript_.records.push_back(std::move(rec));
  if (f) {
    transcript_.reason = TerminalReason::BddViolation;
  } else if (config_.mode == Mode::Online && transcript_.records.back().shutdown) {
    transcript_.reason = TerminalReason::Shutdown;
  } else if (t_ == T + transcript_.hold_steps) {
    transcript_.reason = TerminalReason::Completed;
  }
  out.done = transcript_.reason != TerminalReason::Running;
  if (!out.done) pending_ = next_clean();
  out.state = observe();
  return out;
}

std::vector<double> replay_soc_bias(const EpisodeTranscript& tr, const EnvContext& ctx) {
  auto fake = ctx.cc_belief.at(static_cast<std::size_t>(tr.start_row));
  auto actual = fake;
  std::vector<double> out;
  out.reserve(tr.records.size());
  for (const auto& r : tr.records) {
    fake = estimation::ekf_step(fake, r.z.bess.v_dc, r.z.bess.i_dc, ctx.plant.dt, ctx.plant.pack).state;
    actual = estimation::ekf_step(actual, r.clean_v_dc, r.clean_i_dc, ctx.plant.dt, ctx.plant.pack).state;
    out.push_back(fake.soc_hat() - actual.soc_hat());
  }
  return out;
}

const char* to_string(Mode mode) { return mode == Mode::Offline ? "offline" : "online"; }

const char* to_string(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::Running: return "running";
    case TerminalReason::Completed: return "completed";
    case TerminalReason::BddViolation: return "bdd_violation";
    case TerminalReason::Shutdown: return "shutdown";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "offline") return Mode::Offline;
  if (s == "online") return Mode::Online;
  fail(ErrorCode::Config, "unknown attack mode '" + s + "'");
}

}  // namespace sfdia::attack
