// sfdia: dataset generation, calibration, training and attack campaigns.
//
// Every subcommand reads its inputs from and writes its outputs into the run
// directory given by --out unless an explicit path is passed:
//
//   simulate        dataset.csv, run.json
//   calibrate       thresholds.json
//   train           policy.ckpt (+ .txt), policy_unconstrained.ckpt when
//                   the campaign has unconstrained cases, reward_curve*.csv,
//                   eval.json
//   attack-offline  campaign_offline.csv, residual_hist_offline.csv,
//                   manifest_offline.json, transcripts/
//   attack-online   the same with _online
//   report          report.md
//
// --config accepts a profile name (fast, full), a config JSON file, or a
// campaign manifest; a manifest also supplies the seed unless --seed is given.
//
// Exit status: 0 ok, 2 usage, 3 config, 4 convergence or numerical failure,
// 5 I/O, 6 anything else.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sfdia/campaign.hpp"
#include "sfdia/checkpoint.hpp"
#include "sfdia/config.hpp"
#include "sfdia/dataset.hpp"
#include "sfdia/error.hpp"
#include "sfdia/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sfdia;

namespace {

enum Exit { kOk = 0, kUsage = 2, kConfig = 3, kConvergence = 4, kIo = 5, kOther = 6 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::InvalidParameter:
    case ErrorCode::Range:
      return kConfig;
    case ErrorCode::NonConvergence:
    case ErrorCode::Observability:
    case ErrorCode::Numerical:
      return kConvergence;
    case ErrorCode::Io:
      return kIo;
    default:
      return kOther;
  }
}

struct Common {
  std::string config = "fast";
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::string dataset;
  std::string thresholds;
  std::string policy;
  std::string policy_unconstrained;
  bool zero_policy = false;
  int episodes = -1;
  bool verbose = false;
};

struct Run {
  config::RunConfig cfg;
  std::string hash;
  fs::path out;
};

Run resolve(const Common& o) {
  Run r;
  std::optional<std::string> manifest_hash;
  if (o.config == "fast" || o.config == "full") {
    r.cfg = config::profile_by_name(o.config);
  } else {
    json j;
    try {
      j = json::parse(report::read_text(o.config));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::Config, "'" + o.config + "' is not valid JSON: " + e.what());
    }
    if (j.is_object() && j.value("kind", "") == "sfdia-manifest") {
      const auto m = harness::Manifest::from_json(j);
      r.cfg = config::from_json(m.config);
      r.cfg.seed = m.seed;
      manifest_hash = m.config_hash;
    } else {
      r.cfg = config::from_json(j);
    }
  }
  if (o.seed) r.cfg.seed = *o.seed;
  r.cfg.validate();
  r.hash = config::config_hash(r.cfg);
  if (manifest_hash && !o.seed)
    require(*manifest_hash == r.hash, ErrorCode::Config,
            "manifest config hash " + *manifest_hash + " does not match its embedded config (" + r.hash + ")");
  r.out = o.out;
  std::error_code ec;
  fs::create_directories(r.out, ec);
  if (ec || !fs::is_directory(r.out)) fail(ErrorCode::Io, "cannot create output directory '" + o.out + "'");
  spdlog::info("profile {} seed {} config {}", r.cfg.profile, r.cfg.seed, r.hash);
  return r;
}

fs::path input(const std::string& given, const Run& r, const char* name) {
  return given.empty() ? r.out / name : fs::path(given);
}

plant::Dataset load_dataset(const Common& o, const Run& r) {
  const auto path = input(o.dataset, r, "dataset.csv");
  auto ds = plant::read_dataset_csv(r.cfg.plant, path);
  require(ds.days == r.cfg.days, ErrorCode::Config,
          path.string() + " covers " + std::to_string(ds.days) + " days, config asks for " + std::to_string(r.cfg.days));
  require(ds.seed == harness::derive_seed(r.cfg.seed, "dataset"), ErrorCode::Config,
          path.string() + " was generated with a different seed");
  return ds;
}

bdd::Thresholds load_thresholds(const Common& o, const Run& r) {
  const auto path = input(o.thresholds, r, "thresholds.json");
  json j;
  try {
    j = json::parse(report::read_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Io, path.string() + " is not valid JSON: " + e.what());
  }
  require(j.value("kind", "") == "sfdia-thresholds", ErrorCode::Io, path.string() + " is not a threshold manifest");
  bdd::Thresholds t;
  t.tau_se = j.at("tau_se").get<double>();
  t.tau_soc = j.at("tau_soc").get<double>();
  t.bounds = bdd::ChannelBounds::defaults(r.cfg.plant.plan, r.cfg.plant.pack);
  t.validate();
  return t;
}

bool needs(const std::vector<attack::ScenarioSpec>& cases, bool constrained) {
  for (const auto& c : cases)
    if (c.target.has_value() == constrained) return true;
  return false;
}

int cmd_simulate(const Common& o) {
  const auto r = resolve(o);
  const auto ds = plant::generate_dataset(r.cfg.plant, r.cfg.days, harness::derive_seed(r.cfg.seed, "dataset"));
  plant::write_dataset_csv(ds, r.cfg.plant, r.out / "dataset.csv");
  config::save(r.cfg, (r.out / "run.json").string());
  spdlog::info("wrote {} rows ({} days) to {}", ds.size(), ds.days, (r.out / "dataset.csv").string());
  return kOk;
}

int cmd_calibrate(const Common& o) {
  const auto r = resolve(o);
  const auto ds = load_dataset(o, r);
  const auto train = ds.slice_days(0, r.cfg.train_days);
  const auto held = ds.slice_days(r.cfg.train_days, r.cfg.test_days());
  const auto cal = harness::calibrate(r.cfg, train, &held);
  json j = {{"kind", "sfdia-thresholds"},
            {"version", 1},
            {"tau_se", cal.thresholds.tau_se},
            {"tau_soc", cal.thresholds.tau_soc},
            {"rule", {{"fraction", r.cfg.calibration.fraction}, {"soc_floor", r.cfg.calibration.soc_floor}}},
            {"window", {{"first_day", 0}, {"days", r.cfg.train_days}, {"rows", train.size()}}},
            {"held_out",
             {{"first_day", r.cfg.train_days},
              {"days", r.cfg.test_days()},
              {"rows", cal.held_out_samples},
              {"flagged", cal.held_out_flagged},
              {"false_positive_rate", cal.false_positive_rate}}},
            {"seed", r.cfg.seed},
            {"config_hash", r.hash}};
  report::write_text(r.out / "thresholds.json", j.dump(2) + "\n");
  spdlog::info("tau_SE {:.4f} tau_SoC {:.4f}; held-out false positives {}/{}", cal.thresholds.tau_se,
               cal.thresholds.tau_soc, cal.held_out_flagged, cal.held_out_samples);
  return kOk;
}

json train_one(const Run& r, std::shared_ptr<const attack::EnvContext> ctx, bool constrained, int episodes,
               const std::string& suffix) {
  auto cfg = r.cfg;
  cfg.env.constrained = constrained;
  cfg.env.soc_bounds = false;
  const std::string kind = constrained ? "constrained" : "unconstrained";
  rl::TrainOptions opts;
  opts.episodes = episodes;
  opts.on_episode = [&](const rl::EpisodeLog& l) {
    if ((l.episode + 1) % 100 == 0 || l.episode + 1 == episodes)
      spdlog::info("{} episode {}/{} return {:.1f} mean {:.1f}", kind, l.episode + 1, episodes, l.episode_return,
                   l.sliding_mean);
  };
  const auto ckpt = r.out / ("policy" + suffix + ".ckpt");
  opts.on_divergence = [&](const rl::SacNets<float>& nets) {
    if (!nets.finite()) return;
    rl::Checkpoint ck{nets, cfg.sac, cfg.seed, 0, r.hash};
    rl::save_checkpoint(ck, (r.out / ("policy" + suffix + ".diverged.ckpt")).string());
  };
  const auto outcome = harness::train_agent(cfg, ctx, opts);
  const auto& res = outcome.result;
  rl::Checkpoint ck{res.nets, cfg.sac, cfg.seed, static_cast<std::uint32_t>(episodes), r.hash};
  rl::save_checkpoint(ck, ckpt.string());
  report::write_reward_curve(res.returns, res.sliding_mean, r.out / ("reward_curve" + suffix + ".csv"));

  const auto scale = Eigen::Vector2d(cfg.env.scale.v, cfg.env.scale.i);
  const auto ev = harness::evaluate_policy(harness::deterministic_policy(res.nets.actor, scale), ctx, cfg.env,
                                           cfg.eval_episodes, cfg.eval_tolerance,
                                           harness::derive_seed(cfg.seed, "eval" + suffix));
  json eps = json::array();
  for (const auto& e : ev.episodes)
    eps.push_back({{"start_row", e.start_row},
                   {"target", e.target},
                   {"dphi_td", e.dphi_td},
                   {"dphi_te", e.dphi_te},
                   {"completed", e.completed},
                   {"hit", e.hit},
                   {"steps", e.steps}});
  spdlog::info("{} policy: {} episodes in {:.0f} s; evaluation completed {}/{}, hits {}", kind, episodes,
               outcome.seconds, ev.completed, ev.episodes.size(), ev.hits);
  return {{"kind", kind},
          {"checkpoint", ckpt.filename().string()},
          {"episodes", episodes},
          {"completed", ev.completed},
          {"hits", ev.hits},
          {"hit_rate", ev.hit_rate()},
          {"tolerance", cfg.eval_tolerance},
          {"evaluation", eps}};
}

int cmd_train(const Common& o) {
  const auto r = resolve(o);
  const auto ds = load_dataset(o, r);
  const auto th = load_thresholds(o, r);
  auto train = std::make_shared<const plant::Dataset>(ds.slice_days(0, r.cfg.train_days));
  auto ctx = std::make_shared<const attack::EnvContext>(attack::EnvContext::build(r.cfg.plant, train, th));
  const int episodes = o.episodes >= 0 ? o.episodes : r.cfg.train_episodes;

  const bool any_con = needs(r.cfg.offline_cases, true) || needs(r.cfg.online_cases, true);
  const bool any_unc = needs(r.cfg.offline_cases, false) || needs(r.cfg.online_cases, false);
  json runs = json::array();
  if (any_con || !any_unc) runs.push_back(train_one(r, ctx, true, episodes, ""));
  if (any_unc) runs.push_back(train_one(r, ctx, false, episodes, "_unconstrained"));
  report::write_text(r.out / "eval.json", json{{"seed", r.cfg.seed}, {"config_hash", r.hash}, {"runs", runs}}.dump(2) + "\n");
  return kOk;
}

std::string file_hash(const fs::path& p) { return config::hex64(config::fnv1a64(report::read_text(p))); }

harness::Policy load_policy(const fs::path& path, std::shared_ptr<const attack::EnvContext> ctx,
                            attack::EnvConfig env, bool constrained, std::string& hash) {
  const auto ck = rl::load_checkpoint(path.string());
  env.constrained = constrained;
  const int want = attack::AttackEnv(std::move(ctx), env).state_dim();
  require(ck.nets.actor.input_dim() == want, ErrorCode::Config,
          path.string() + " expects " + std::to_string(ck.nets.actor.input_dim()) + " state entries, the " +
              (constrained ? "constrained" : "unconstrained") + " environment has " + std::to_string(want));
  hash += (hash.empty() ? "" : "+") + file_hash(path);
  return harness::deterministic_policy(ck.nets.actor, ck.nets.scale.cast<double>());
}

int cmd_attack(const Common& o, attack::Mode mode) {
  const auto r = resolve(o);
  const auto ds = load_dataset(o, r);
  const auto th = load_thresholds(o, r);
  auto held = std::make_shared<const plant::Dataset>(ds.slice_days(r.cfg.train_days, r.cfg.test_days()));
  auto ctx = std::make_shared<const attack::EnvContext>(attack::EnvContext::build(r.cfg.plant, held, th));
  const auto& cases = mode == attack::Mode::Online ? r.cfg.online_cases : r.cfg.offline_cases;

  harness::PolicySet ps;
  std::string policy_hash;
  if (o.zero_policy) {
    ps.constrained = ps.unconstrained = harness::zero_policy();
  } else {
    if (needs(cases, true)) ps.constrained = load_policy(input(o.policy, r, "policy.ckpt"), ctx, r.cfg.env, true, policy_hash);
    if (needs(cases, false))
      ps.unconstrained =
          load_policy(input(o.policy_unconstrained, r, "policy_unconstrained.ckpt"), ctx, r.cfg.env, false,
                      policy_hash);
  }

  auto rep = mode == attack::Mode::Online ? harness::run_online_campaign(ps, ctx, cases, r.cfg.env)
                                          : harness::run_offline_campaign(ps, ctx, cases, r.cfg.env);
  auto& m = rep.manifest;
  m.config_hash = r.hash;
  m.config = config::to_json(r.cfg);
  m.seed = r.cfg.seed;
  m.generator_version = ds.generator_version;
  m.dataset_days = ds.days;
  m.tau_se = th.tau_se;
  m.tau_soc = th.tau_soc;
  m.policy_hash = policy_hash;
  m.threads = 1;
  report::export_report(rep, r.out);
  for (const auto& row : rep.rows)
    spdlog::info("{:>8} dphi(t_e) {:6.2f}% residual median {:.3f} BDD {} shutdowns {} {}", row.id,
                 100.0 * row.dphi_te, row.residual_median, row.bdd_triggers, row.shutdown_events,
                 row.completed ? "completed" : "stopped");
  return kOk;
}

int cmd_report(const Common& o) {
  const auto r = resolve(o);
  const auto text = report::summarize(r.out);
  report::write_text(r.out / "report.md", text);
  std::fputs(text.c_str(), stdout);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  auto log = spdlog::stderr_color_mt("sfdia");
  spdlog::set_default_logger(log);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Delayed stealthy false data injection against a grid-tied BESS"};
  app.require_subcommand(1);
  Common o;
  std::uint64_t seed = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "profile name (fast, full), config JSON, or campaign manifest")
        ->capture_default_str();
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--out", o.out, "run directory")->capture_default_str();
    sub->add_flag("-v,--verbose", o.verbose, "debug logging");
  };
  auto* sim = app.add_subcommand("simulate", "generate the synthetic dataset");
  auto* cal = app.add_subcommand("calibrate", "calibrate detector thresholds on the training window");
  auto* trn = app.add_subcommand("train", "train the SAC attacker");
  auto* off = app.add_subcommand("attack-offline", "replay attack campaign on the held-out window");
  auto* onl = app.add_subcommand("attack-online", "closed-loop attack campaign on the held-out window");
  auto* rep = app.add_subcommand("report", "summarise campaign files as markdown");
  for (auto* s : {sim, cal, trn, off, onl, rep}) add_common(s);
  for (auto* s : {cal, trn, off, onl}) s->add_option("--dataset", o.dataset, "dataset CSV (default <out>/dataset.csv)");
  for (auto* s : {trn, off, onl})
    s->add_option("--thresholds", o.thresholds, "threshold manifest (default <out>/thresholds.json)");
  trn->add_option("--episodes", o.episodes, "override the configured episode count")->check(CLI::NonNegativeNumber);
  for (auto* s : {off, onl}) {
    s->add_option("--policy", o.policy, "constrained checkpoint (default <out>/policy.ckpt)");
    s->add_option("--policy-unconstrained", o.policy_unconstrained,
                  "unconstrained checkpoint (default <out>/policy_unconstrained.ckpt)");
    s->add_flag("--zero-policy", o.zero_policy, "inject nothing");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  for (auto* s : {sim, cal, trn, off, onl, rep})
    if (s->parsed() && s->count("--seed")) o.seed = seed;
  if (o.verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (cal->parsed()) return cmd_calibrate(o);
    if (trn->parsed()) return cmd_train(o);
    if (off->parsed()) return cmd_attack(o, attack::Mode::Offline);
    if (onl->parsed()) return cmd_attack(o, attack::Mode::Online);
    if (rep->parsed()) return cmd_report(o);
  } catch (const Error& e) {
    spdlog::error("{} error: {}", to_string(e.code()), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kOther;
  }
  return kUsage;
}
