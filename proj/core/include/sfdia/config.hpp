// Run configuration: JSON file with a schema version, layered over a named
// profile ("fast" for CI, "full" for the 20-day, 9000-episode protocol).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfdia/attack_env.hpp"
#include "sfdia/bdd.hpp"
#include "sfdia/plant.hpp"
#include "sfdia/sac.hpp"

namespace sfdia::config {

constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::string profile = "fast";
  std::uint64_t seed = 7;

  plant::PlantConfig plant;
  int days = 4;        // total simulated days
  int train_days = 2;  // leading days used for calibration and training
  bdd::CalibrationRule calibration;

  attack::EnvConfig env;
  rl::SacHyper sac;
  int train_episodes = 2000;
  int eval_episodes = 50;
  double eval_tolerance = 0.01;  // |dphi - target| for a hit, fraction

  /// Hours relative to the start of the held-out window.
  std::vector<attack::ScenarioSpec> offline_cases;
  std::vector<attack::ScenarioSpec> online_cases;

  int test_days() const { return days - train_days; }
  void validate() const;
};

RunConfig fast_profile();
RunConfig full_profile();
RunConfig profile_by_name(const std::string& name);

/// The 16 standard attack cases, unconstrained then constrained (case 0, the
/// clean run, is always added by the campaign).
std::vector<attack::ScenarioSpec> standard_case_grid(attack::Mode mode);
/// 6 am to 8 am on the second held-out day, target bias held until noon.
attack::ScenarioSpec one_shot_kill_case();

RunConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load(const std::string& path);
void save(const RunConfig& c, const std::string& path);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& c);
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace sfdia::config
