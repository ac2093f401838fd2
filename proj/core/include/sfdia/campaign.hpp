// Orchestration: dataset, threshold calibration, training, evaluation and the
// offline/online attack campaigns.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sfdia/attack_env.hpp"
#include "sfdia/config.hpp"
#include "sfdia/sac.hpp"

namespace sfdia::harness {

/// Independent RNG stream for a named stage of a run.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& stage);

struct Calibration {
  bdd::Thresholds thresholds;
  std::vector<double> residuals;         // clean calibration window
  std::vector<double> soc_discrepancy;
  double false_positive_rate = 0.0;      // held-out window
  std::size_t held_out_samples = 0;
  std::size_t held_out_flagged = 0;
  std::vector<double> held_out_residuals;
};

/// Residual and SoC discrepancy of every clean row, as the detector sees them.
std::vector<bdd::CalibrationSample> clean_samples(const plant::PlantConfig& config, const plant::Dataset& ds);

/// Thresholds from the training window, false-positive rate on the held-out
/// window. Either window may be the same dataset.
Calibration calibrate(const config::RunConfig& cfg, const plant::Dataset& train_window,
                      const plant::Dataset* held_out);

/// Adapts AttackEnv to the trainer's environment contract.
class AttackEnvAdapter : public rl::Environment {
 public:
  explicit AttackEnvAdapter(attack::AttackEnv& env) : env_(env) {}
  int state_dim() const override { return env_.state_dim(); }
  int action_dim() const override { return 2; }
  Eigen::VectorXd action_scale() const override;
  Eigen::VectorXd reset(std::mt19937_64& rng) override { return env_.reset(rng); }
  rl::EnvStep step(const Eigen::VectorXd& action) override;

 private:
  attack::AttackEnv& env_;
};

using Policy = std::function<Eigen::Vector2d(const Eigen::VectorXd& state)>;

/// Mean action tanh(mu) * scale of a trained actor.
Policy deterministic_policy(const rl::MlpParams& actor, const Eigen::VectorXd& scale);
Policy zero_policy();

struct TrainOutcome {
  rl::TrainResult result;
  double seconds = 0.0;
};

TrainOutcome train_agent(const config::RunConfig& cfg, std::shared_ptr<const attack::EnvContext> ctx,
                         const rl::TrainOptions& opts);

struct EvalEpisode {
  long start_row = 0;
  double target = 0.0;
  double dphi_td = 0.0;
  double dphi_te = 0.0;
  bool completed = false;
  bool hit = false;  // completed and |dphi_te - target| within tolerance
  int steps = 0;
};

struct EvalSummary {
  std::vector<EvalEpisode> episodes;
  int completed = 0;
  int hits = 0;
  double hit_rate() const { return episodes.empty() ? 0.0 : static_cast<double>(hits) / episodes.size(); }
};

/// Runs the policy on random windows of the context's dataset with the
/// training episode shape.
EvalSummary evaluate_policy(const Policy& policy, std::shared_ptr<const attack::EnvContext> ctx,
                            const attack::EnvConfig& env, int episodes, double tolerance, std::uint64_t seed);

struct CaseResult {
  std::string id;
  attack::Mode mode = attack::Mode::Offline;
  bool attacked = true;  // false for the clean reference row
  double t_s = 0.0, t_d = 0.0, t_e = 0.0;
  std::optional<double> target;
  double dphi_td = 0.0;  // fraction
  double dphi_te = 0.0;
  double residual_median = 0.0;
  int bdd_triggers = 0;
  int shutdown_events = 0;
  bool completed = false;  // not stopped by the BDD (an online shutdown counts)
  int steps_run = 0;
  std::vector<double> residuals;
  attack::EpisodeTranscript transcript;
  std::vector<double> clean_true_soc;  // online: same window without attack
};

struct Manifest {
  std::string config_hash;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string generator_version;
  int dataset_days = 0;
  double tau_se = 0.0;
  double tau_soc = 0.0;
  std::string policy_hash;  // FNV-1a of the checkpoint bytes, empty for the zero policy
  int threads = 1;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

struct CampaignReport {
  attack::Mode mode = attack::Mode::Offline;
  std::vector<CaseResult> rows;  // row 0 is the clean reference when present
  Manifest manifest;
};

/// Policies by attack kind; a case whose kind has no policy is rejected.
struct PolicySet {
  Policy constrained;
  Policy unconstrained;
  const Policy& for_case(const attack::ScenarioSpec& spec) const;
};

/// Offline replay over the held-out window. The clean reference row covers
/// every held-out row.
CampaignReport run_offline_campaign(const PolicySet& policies, std::shared_ptr<const attack::EnvContext> held_out,
                                    const std::vector<attack::ScenarioSpec>& cases, const attack::EnvConfig& env);

/// Closed loop: the falsified SoC drives the BEMS of a live plant.
CampaignReport run_online_campaign(const PolicySet& policies, std::shared_ptr<const attack::EnvContext> held_out,
                                   const std::vector<attack::ScenarioSpec>& cases, const attack::EnvConfig& env);

/// Runs one case and summarises it.
CaseResult run_case(const Policy& policy, std::shared_ptr<const attack::EnvContext> ctx,
                    const attack::ScenarioSpec& spec, const attack::EnvConfig& env);

double median(std::vector<double> v);

}  // namespace sfdia::harness
