#include "sfdia/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sfdia/error.hpp"
#include "sfdia/wls.hpp"

namespace sfdia::harness {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

int shutdown_transitions(const attack::EpisodeTranscript& tr) {
  int n = 0;
  bool prev = false;
  for (const auto& r : tr.records) {
    if (r.shutdown && !prev) ++n;
    prev = r.shutdown;
  }
  return n;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, const std::string& stage) {
  return mix(mix(seed) ^ config::fnv1a64(stage));
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lo + hi);
}

std::vector<bdd::CalibrationSample> clean_samples(const plant::PlantConfig& config, const plant::Dataset& ds) {
  const auto det = attack::make_detector(config);
  const auto beliefs = attack::replay_cc_beliefs(config, ds);
  std::vector<bdd::CalibrationSample> out;
  out.reserve(ds.size());
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const auto& z = ds.rows[k].sample.z;
    const auto est = estimation::wls_estimate(z.se_vector(), det.net, det.plan, det.vsi, det.weights, det.wls);
    const auto next = estimation::ekf_step(beliefs[k], z.bess.v_dc, z.bess.i_dc, config.dt, config.pack).state;
    out.push_back({est.residual, z.bess.soc, next.soc_hat()});
  }
  return out;
}

Calibration calibrate(const config::RunConfig& cfg, const plant::Dataset& train_window, const plant::Dataset* held_out) {
  Calibration c;
  const auto samples = clean_samples(cfg.plant, train_window);
  for (const auto& s : samples) {
    c.residuals.push_back(s.residual);
    c.soc_discrepancy.push_back(std::abs(s.soc_reported - s.soc_hat));
  }
  c.thresholds = bdd::calibrate_thresholds(samples, cfg.calibration,
                                           bdd::ChannelBounds::defaults(cfg.plant.plan, cfg.plant.pack));
  if (held_out) {
    const auto det = attack::make_detector(cfg.plant);
    auto cc = attack::replay_cc_beliefs(cfg.plant, *held_out).front();
    for (const auto& row : held_out->rows) {
      const auto out = bdd::detect(row.sample.z, det, c.thresholds, cc);
      cc = out.ekf_cc;
      ++c.held_out_samples;
      if (!out.verdict.pass) ++c.held_out_flagged;
      if (out.verdict.residual_value) c.held_out_residuals.push_back(*out.verdict.residual_value);
    }
    c.false_positive_rate = c.held_out_samples ? static_cast<double>(c.held_out_flagged) / c.held_out_samples : 0.0;
  }
  return c;
}

Eigen::VectorXd AttackEnvAdapter::action_scale() const {
  return Eigen::Vector2d(env_.config().scale.v, env_.config().scale.i);
}

rl::EnvStep AttackEnvAdapter::step(const Eigen::VectorXd& action) {
  require(action.size() == 2, ErrorCode::InvalidParameter, "attack action has two entries");
  auto r = env_.step(Eigen::Vector2d(action(0), action(1)));
  return {std::move(r.state), r.reward, r.done};
}

Policy deterministic_policy(const rl::MlpParams& actor, const Eigen::VectorXd& scale) {
  return [actor, scale](const Eigen::VectorXd& s) {
    std::mt19937_64 unused(0);
    const auto a = rl::policy_sample(actor, s, scale, unused, true).action;
    return Eigen::Vector2d(a(0), a(1));
  };
}

Policy zero_policy() {
  return [](const Eigen::VectorXd&) { return Eigen::Vector2d::Zero().eval(); };
}

TrainOutcome train_agent(const config::RunConfig& cfg, std::shared_ptr<const attack::EnvContext> ctx,
                         const rl::TrainOptions& opts) {
  attack::AttackEnv env(std::move(ctx), cfg.env);
  AttackEnvAdapter adapter(env);
  std::mt19937_64 rng(derive_seed(cfg.seed, "train"));
  const auto t0 = std::chrono::steady_clock::now();
  TrainOutcome out;
  out.result = rl::train(adapter, cfg.sac, opts, rng);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

EvalSummary evaluate_policy(const Policy& policy, std::shared_ptr<const attack::EnvContext> ctx,
                            const attack::EnvConfig& env_cfg, int episodes, double tolerance, std::uint64_t seed) {
  attack::AttackEnv env(std::move(ctx), env_cfg);
  std::mt19937_64 rng(seed);
  EvalSummary sum;
  for (int k = 0; k < episodes; ++k) {
    Eigen::VectorXd s = env.reset(rng);
    while (!env.done()) s = env.step(policy(s)).state;
    const auto& tr = env.transcript();
    EvalEpisode e;
    e.start_row = tr.start_row;
    e.target = tr.target.value_or(0.0);
    e.steps = static_cast<int>(tr.records.size());
    e.completed = tr.reason != attack::TerminalReason::BddViolation;
    if (static_cast<int>(tr.records.size()) >= tr.t_d) e.dphi_td = tr.records[tr.t_d - 1].attack.soc_bias;
    e.dphi_te = tr.records.back().attack.soc_bias;
    e.hit = e.completed && tr.target && std::abs(e.dphi_te - *tr.target) <= tolerance;
    sum.completed += e.completed;
    sum.hits += e.hit;
    sum.episodes.push_back(e);
  }
  return sum;
}

CaseResult run_case(const Policy& policy, std::shared_ptr<const attack::EnvContext> ctx,
                    const attack::ScenarioSpec& spec, const attack::EnvConfig& env_cfg) {
  attack::AttackEnv env(ctx, env_cfg);
  Eigen::VectorXd s = env.reset(spec);
  while (!env.done()) s = env.step(policy(s)).state;

  CaseResult r;
  r.id = spec.id;
  r.mode = spec.mode;
  r.t_s = spec.t_s;
  r.t_d = spec.t_d;
  r.t_e = spec.t_e;
  r.target = spec.target;
  r.transcript = env.transcript();
  const auto& tr = r.transcript;
  r.completed = tr.reason != attack::TerminalReason::BddViolation;
  r.steps_run = static_cast<int>(tr.records.size());
  const int T = tr.steps;
  if (r.steps_run >= tr.t_d) r.dphi_td = tr.records[tr.t_d - 1].attack.soc_bias;
  r.dphi_te = tr.records[std::min(r.steps_run, T) - 1].attack.soc_bias;
  for (const auto& rec : tr.records) {
    if (rec.verdict.residual_value) r.residuals.push_back(*rec.verdict.residual_value);
    if (!rec.verdict.pass) ++r.bdd_triggers;
  }
  r.residual_median = median(r.residuals);
  r.shutdown_events = shutdown_transitions(tr);

  if (spec.mode == attack::Mode::Online) {
    attack::AttackEnv clean(ctx, env_cfg);
    const auto zero = zero_policy();
    Eigen::VectorXd cs = clean.reset(spec);
    while (!clean.done()) cs = clean.step(zero(cs)).state;
    for (const auto& rec : clean.transcript().records) r.clean_true_soc.push_back(rec.true_soc);
  }
  return r;
}

const Policy& PolicySet::for_case(const attack::ScenarioSpec& spec) const {
  const Policy& p = spec.target ? constrained : unconstrained;
  require(static_cast<bool>(p), ErrorCode::Config,
          "case '" + spec.id + "' needs a policy trained in " + (spec.target ? "constrained" : "unconstrained") + " mode");
  return p;
}

namespace {

CaseResult clean_row(const attack::EnvContext& ctx, attack::Mode mode) {
  CaseResult r;
  r.id = "clean";
  r.mode = mode;
  r.attacked = false;
  r.completed = true;
  const auto det = attack::make_detector(ctx.plant);
  auto cc = ctx.cc_belief.front();
  for (const auto& row : ctx.dataset->rows) {
    const auto out = bdd::detect(row.sample.z, det, ctx.thresholds, cc);
    cc = out.ekf_cc;
    if (out.verdict.residual_value) r.residuals.push_back(*out.verdict.residual_value);
    if (!out.verdict.pass) ++r.bdd_triggers;
    if (row.sample.shutdown.shutdown) ++r.shutdown_events;
    ++r.steps_run;
  }
  r.residual_median = median(r.residuals);
  r.t_e = static_cast<double>(ctx.dataset->size()) * ctx.plant.dt / 3600.0;
  return r;
}

CampaignReport run_campaign(attack::Mode mode, const PolicySet& policies,
                            std::shared_ptr<const attack::EnvContext> ctx,
                            const std::vector<attack::ScenarioSpec>& cases, const attack::EnvConfig& env) {
  require(ctx != nullptr, ErrorCode::InvalidParameter, "campaign needs an environment context");
  CampaignReport rep;
  rep.mode = mode;
  rep.rows.push_back(clean_row(*ctx, mode));
  auto cfg = env;
  cfg.mode = mode;
  // The reported-SoC range check is only dropped for training and offline replay.
  cfg.soc_bounds = mode == attack::Mode::Online;
  for (auto spec : cases) {
    spec.mode = mode;
    rep.rows.push_back(run_case(policies.for_case(spec), ctx, spec, cfg));
  }
  return rep;
}

}  // namespace

CampaignReport run_offline_campaign(const PolicySet& policies, std::shared_ptr<const attack::EnvContext> held_out,
                                    const std::vector<attack::ScenarioSpec>& cases, const attack::EnvConfig& env) {
  return run_campaign(attack::Mode::Offline, policies, std::move(held_out), cases, env);
}

CampaignReport run_online_campaign(const PolicySet& policies, std::shared_ptr<const attack::EnvContext> held_out,
                                   const std::vector<attack::ScenarioSpec>& cases, const attack::EnvConfig& env) {
  return run_campaign(attack::Mode::Online, policies, std::move(held_out), cases, env);
}

nlohmann::json Manifest::to_json() const {
  return {{"kind", "sfdia-manifest"},
          {"version", 1},
          {"config_hash", config_hash},
          {"config", config},
          {"seed", seed},
          {"generator_version", generator_version},
          {"dataset_days", dataset_days},
          {"tau_se", tau_se},
          {"tau_soc", tau_soc},
          {"policy_hash", policy_hash},
          {"threads", threads}};
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.value("kind", "") == "sfdia-manifest", ErrorCode::Config, "not an sfdia manifest");
  Manifest m;
  try {
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.generator_version = j.value("generator_version", "");
    m.dataset_days = j.value("dataset_days", 0);
    m.tau_se = j.value("tau_se", 0.0);
    m.tau_soc = j.value("tau_soc", 0.0);
    m.policy_hash = j.value("policy_hash", "");
    m.threads = j.value("threads", 1);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

}  // namespace sfdia::harness
