// Current sign convention: BESS i_dc positive = discharge. SoC errors are
// stored as fractions and converted to percentage points for the reward.
#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfdia/bdd.hpp"
#include "sfdia/dataset.hpp"
#include "sfdia/reward.hpp"

namespace sfdia::attack {

enum class Mode { Offline, Online };

struct ActionScale {
  double v = 2.0;  // V per step
  double i = 5.0;  // A per step
};

/// One attack case. Hours are absolute from the start of the dataset, so
/// t_s = 30 is 6 am on the second day.
struct ScenarioSpec {
  std::string id;
  double t_s = 0.0;
  double t_d = 0.0;
  double t_e = 1.0;
  std::optional<double> target;  // fraction; present iff constrained
  Mode mode = Mode::Offline;
  double hold_until = 0.0;       // online: keep the final bias until this hour

  void validate() const;
};

struct EnvConfig {
  int episode_steps = 600;
  double t_d_fraction = 0.77;
  bool constrained = true;
  std::vector<double> target_choices = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
  Mode mode = Mode::Offline;
  ActionScale scale;
  RewardParams reward;
  bool soc_bounds = false;  // reported-SoC range check; off while training
  /// Random resets only pick windows whose clean replay raises no alarm.
  bool skip_alarmed_windows = false;

  void validate() const;
};

struct AttackVector {
  double dv_step = 0.0;
  double di_step = 0.0;
  double cum_dv = 0.0;
  double cum_di = 0.0;
  double soc_bias = 0.0;  // fraction
};

struct StepRecord {
  int t = 0;
  long row = 0;
  bool clipped = false;
  AttackVector attack;
  double fake_soc = 0.0;      // attacker EKF on falsified telemetry
  double actual_soc = 0.0;    // attacker EKF on true telemetry
  double true_soc = 0.0;      // plant battery state
  double clean_v_dc = 0.0;
  double clean_i_dc = 0.0;
  grid::MeasurementSet z;     // as sent to the control centre
  bdd::BddVerdict verdict;
  double reward = 0.0;
  bool shutdown = false;
};

// Online episodes stop at the first BEMS shutdown: with the grid down there is no telemetry left to check.
enum class TerminalReason { Running, Completed, BddViolation, Shutdown };

struct EpisodeTranscript {
  std::string case_id;
  long start_row = 0;
  int steps = 0;       // T
  int t_d = 0;
  int hold_steps = 0;
  std::optional<double> target;
  Mode mode = Mode::Offline;
  std::vector<StepRecord> records;
  TerminalReason reason = TerminalReason::Running;
};

struct StepResult {
  Eigen::VectorXd state;
  double reward = 0.0;
  bool done = false;
  bdd::BddVerdict verdict;
};

/// Shared, read-only inputs of every environment instance.
struct EnvContext {
  plant::PlantConfig plant;
  std::shared_ptr<const plant::Dataset> dataset;
  bdd::Thresholds thresholds;
  bdd::DetectorModel detector;
  /// Control-centre EKF belief at the start of each dataset row (clean replay).
  std::vector<estimation::EkfState> cc_belief;
  /// 1 where the clean row already fails detection (reported-SoC bounds off).
  std::vector<char> clean_alarm;

  static EnvContext build(const plant::PlantConfig& config, std::shared_ptr<const plant::Dataset> dataset,
                          const bdd::Thresholds& thresholds);
};

bdd::DetectorModel make_detector(const plant::PlantConfig& config);

/// Control-centre EKF beliefs at the start of every row of a clean replay.
std::vector<estimation::EkfState> replay_cc_beliefs(const plant::PlantConfig& config, const plant::Dataset& ds);

class AttackEnv {
 public:
  AttackEnv(std::shared_ptr<const EnvContext> ctx, EnvConfig config);

  int state_dim() const;
  int action_dim() const { return 2; }
  const EnvConfig& config() const { return config_; }
  const EnvContext& context() const { return *ctx_; }

  /// Random start row and target (training).
  Eigen::VectorXd reset(std::mt19937_64& rng);
  Eigen::VectorXd reset(const ScenarioSpec& spec);
  Eigen::VectorXd reset(long start_row, int steps, int t_d, std::optional<double> target, int hold_steps = 0,
                        std::string case_id = {});

  /// Action in physical units (V, A per step); clipped to the action scale.
  StepResult step(const Eigen::Vector2d& action);

  bool done() const { return transcript_.reason != TerminalReason::Running; }
  int t() const { return t_; }
  const EpisodeTranscript& transcript() const { return transcript_; }
  const AttackVector& attack() const { return attack_; }

 private:
  grid::MeasurementSet next_clean();
  Eigen::VectorXd observe() const;

  std::shared_ptr<const EnvContext> ctx_;
  EnvConfig config_;
  bdd::Thresholds thresholds_;
  std::unique_ptr<plant::Plant> plant_;
  int t_ = 0;
  AttackVector attack_;
  estimation::EkfState ekf_fake_;
  estimation::EkfState ekf_actual_;
  estimation::EkfState ekf_cc_;
  grid::MeasurementSet pending_;  // clean measurement of the upcoming step
  double pending_true_soc_ = 0.0;
  bool pending_shutdown_ = false;
  double last_reported_soc_ = 0.0;
  EpisodeTranscript transcript_;
};

/// Recomputes the SoC bias by replaying both attacker EKFs over a transcript.
std::vector<double> replay_soc_bias(const EpisodeTranscript& tr, const EnvContext& ctx);

const char* to_string(Mode mode);
const char* to_string(TerminalReason reason);
Mode mode_from_string(const std::string& s);

}  // namespace sfdia::attack
