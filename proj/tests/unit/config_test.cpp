#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "sfdia/checkpoint.hpp"
#include "sfdia/config.hpp"
#include "sfdia/error.hpp"

using namespace sfdia;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "sfdia_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Config, ProfilesValidate) {
  EXPECT_NO_THROW(config::fast_profile().validate());
  EXPECT_NO_THROW(config::full_profile().validate());
  EXPECT_EQ(config::full_profile().env.episode_steps, 600);
  EXPECT_EQ(config::fast_profile().env.episode_steps, 120);
  EXPECT_THROW(config::profile_by_name("huge"), Error);
}

TEST(Config, StandardGridHasSixteenCases) {
  const auto grid = config::standard_case_grid(attack::Mode::Offline);
  EXPECT_EQ(grid.size(), 16u);
  int constrained = 0;
  for (const auto& c : grid) constrained += c.target.has_value();
  EXPECT_EQ(constrained, 10);
}

TEST(Config, JsonRoundTrip) {
  auto c = config::fast_profile();
  c.seed = 99;
  c.sac.alpha = 0.25;
  c.env.target_choices = {0.05, 0.2};
  const auto j = config::to_json(c);
  const auto back = config::from_json(j);
  EXPECT_EQ(config::to_json(back), j);
  EXPECT_EQ(config::config_hash(back), config::config_hash(c));
  EXPECT_EQ(back.seed, 99u);
}

TEST(Config, HashTracksContent) {
  auto a = config::fast_profile(), b = a;
  b.calibration.fraction = 0.98;
  EXPECT_NE(config::config_hash(a), config::config_hash(b));
  EXPECT_EQ(config::config_hash(a).size(), 16u);
}

TEST(Config, PartialFileLayersOverProfile) {
  const auto c = config::from_json(nlohmann::json::parse(R"({"schema_version": 1, "profile": "fast",
      "sac": {"episodes": 12}, "data": {"days": 5}})"));
  EXPECT_EQ(c.train_episodes, 12);
  EXPECT_EQ(c.days, 5);
  EXPECT_EQ(c.env.episode_steps, 120);
}

TEST(Config, RejectsUnknownKeysAndVersions) {
  EXPECT_THROW(config::from_json(nlohmann::json::parse(R"({"schema_version": 1, "sac": {"lrr": 1}})")), Error);
  EXPECT_THROW(config::from_json(nlohmann::json::parse(R"({"schema_version": 2})")), Error);
  EXPECT_THROW(config::from_json(nlohmann::json::parse(R"({"schema_version": 1, "sac": {"lr": "fast"}})")), Error);
  try {
    config::from_json(nlohmann::json::parse(R"({"schema_version": 1, "bogus": 1})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
}

TEST(Config, MissingFileIsIoError) {
  try {
    config::load("/nonexistent/sfdia.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Config, SaveLoad) {
  const auto path = scratch("cfg.json");
  config::save(config::full_profile(), path.string());
  EXPECT_EQ(config::config_hash(config::load(path.string())), config::config_hash(config::full_profile()));
}

TEST(Config, CaseOutsideWindowRejected) {
  auto c = config::fast_profile();
  c.offline_cases.front().t_e = 60.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Checkpoint, RoundTrip) {
  std::mt19937_64 rng(1);
  rl::Checkpoint ck;
  ck.nets = rl::SacNets<float>::create(7, 2, Eigen::Vector2f(2.0f, 5.0f), {6, 5}, rng);
  ck.hyper.hidden = {6, 5};
  ck.hyper.alpha = 0.3;
  ck.seed = 42;
  ck.episodes = 17;
  const auto path = scratch("net.ckpt");
  rl::save_checkpoint(ck, path.string());
  const auto back = rl::load_checkpoint(path.string());
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.episodes, 17u);
  EXPECT_EQ(back.hyper.alpha, 0.3);
  EXPECT_EQ(back.hyper.hidden, ck.hyper.hidden);
  EXPECT_EQ(back.nets.scale, ck.nets.scale);
  EXPECT_EQ(back.nets.actor.flatten(), ck.nets.actor.flatten());
  EXPECT_EQ(back.nets.q2_target.flatten(), ck.nets.q2_target.flatten());
  EXPECT_TRUE(fs::exists(path.string() + ".txt"));
}

TEST(Checkpoint, CorruptFilesAreIoErrors) {
  std::mt19937_64 rng(2);
  rl::Checkpoint ck;
  ck.nets = rl::SacNets<float>::create(3, 2, Eigen::Vector2f(1.0f, 1.0f), {4}, rng);
  const auto path = scratch("cut.ckpt");
  rl::save_checkpoint(ck, path.string());
  fs::resize_file(path, fs::file_size(path) - 9);
  for (const auto& p : {path, scratch("missing.ckpt")}) {
    try {
      rl::load_checkpoint(p.string());
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Io);
    }
  }
  std::ofstream(scratch("junk.ckpt")) << "not a checkpoint at all";
  EXPECT_THROW(rl::load_checkpoint(scratch("junk.ckpt").string()), Error);
}

TEST(Checkpoint, RefusesNonFiniteWeights) {
  std::mt19937_64 rng(3);
  rl::Checkpoint ck;
  ck.nets = rl::SacNets<float>::create(3, 2, Eigen::Vector2f(1.0f, 1.0f), {4}, rng);
  ck.nets.q1.w[0](0, 0) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(rl::save_checkpoint(ck, scratch("nan.ckpt").string()), Error);
}
