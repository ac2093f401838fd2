#include <filesystem>
#include <memory>

#include <gtest/gtest.h>

#include "sfdia/campaign.hpp"
#include "sfdia/dataset.hpp"
#include "sfdia/error.hpp"
#include "sfdia/report.hpp"

using namespace sfdia;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "sfdia_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Dataset, RowCountAndMonotoneTime) {
  plant::PlantConfig cfg;
  const auto ds = plant::generate_dataset(cfg, 2, 5);
  ASSERT_EQ(ds.size(), 2u * 1440);
  for (std::size_t k = 1; k < ds.size(); ++k) EXPECT_GT(ds.rows[k].sample.timestamp, ds.rows[k - 1].sample.timestamp);
  const auto second = ds.slice_days(1, 1);
  EXPECT_EQ(second.size(), 1440u);
  EXPECT_EQ(second.rows.front().sample.step, 1440);
  EXPECT_THROW(ds.slice_days(1, 2), Error);
}

TEST(Dataset, TwentyDaysAndTrainingSplit) {
  const auto cfg = config::full_profile();
  const auto ds = plant::generate_dataset(cfg.plant, cfg.days, 3);
  EXPECT_EQ(ds.size(), 28800u);
  EXPECT_EQ(ds.slice_days(0, cfg.train_days).size(), 25920u);
  EXPECT_EQ(ds.slice_days(cfg.train_days, cfg.test_days()).size(), 2880u);
}

TEST(Dataset, TruthStaysInBand) {
  plant::PlantConfig cfg;
  const auto ds = plant::generate_dataset(cfg, 3, 6);
  for (const auto& r : ds.rows) {
    EXPECT_GE(r.sample.battery.soc, 0.15);
    EXPECT_LE(r.sample.battery.soc, 0.95);
    EXPECT_FALSE(r.sample.shutdown.shutdown);
  }
}

TEST(Dataset, CsvIsDeterministicAndRoundTrips) {
  plant::PlantConfig cfg;
  const auto dir = scratch("dataset");
  plant::write_dataset_csv(plant::generate_dataset(cfg, 1, 8), cfg, dir / "a.csv");
  plant::write_dataset_csv(plant::generate_dataset(cfg, 1, 8), cfg, dir / "b.csv");
  EXPECT_EQ(report::read_text(dir / "a.csv"), report::read_text(dir / "b.csv"));
  const auto back = plant::read_dataset_csv(cfg, dir / "a.csv");
  plant::write_dataset_csv(back, cfg, dir / "c.csv");
  EXPECT_EQ(report::read_text(dir / "a.csv"), report::read_text(dir / "c.csv"));
}

TEST(Seeds, StagesAreIndependent) {
  EXPECT_NE(harness::derive_seed(1, "train"), harness::derive_seed(1, "eval"));
  EXPECT_NE(harness::derive_seed(1, "train"), harness::derive_seed(2, "train"));
  EXPECT_EQ(harness::derive_seed(1, "train"), harness::derive_seed(1, "train"));
}

TEST(Median, OddEven) {
  EXPECT_EQ(harness::median({3, 1, 2}), 2.0);
  EXPECT_EQ(harness::median({4, 1, 3, 2}), 2.5);
  EXPECT_EQ(harness::median({}), 0.0);
}

class CampaignFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cfg_ = config::fast_profile();
    const auto ds = plant::generate_dataset(cfg_.plant, cfg_.days, 31);
    const auto train = ds.slice_days(0, cfg_.train_days);
    auto held = std::make_shared<const plant::Dataset>(ds.slice_days(cfg_.train_days, cfg_.test_days()));
    cal_ = harness::calibrate(cfg_, train, held.get());
    ctx_ = std::make_shared<const attack::EnvContext>(attack::EnvContext::build(cfg_.plant, held, cal_.thresholds));
  }
  static harness::PolicySet zeros() { return {harness::zero_policy(), harness::zero_policy()}; }
  static config::RunConfig cfg_;
  static harness::Calibration cal_;
  static std::shared_ptr<const attack::EnvContext> ctx_;
};
config::RunConfig CampaignFixture::cfg_;
harness::Calibration CampaignFixture::cal_;
std::shared_ptr<const attack::EnvContext> CampaignFixture::ctx_;

TEST_F(CampaignFixture, CalibrationWindowIsClean) {
  EXPECT_GT(cal_.thresholds.tau_se, 0.0);
  EXPECT_GE(cal_.thresholds.tau_soc, 0.01);
  EXPECT_LE(cal_.false_positive_rate, 0.02);
  EXPECT_EQ(cal_.held_out_samples, static_cast<std::size_t>(cfg_.test_days() * 1440));
}

TEST_F(CampaignFixture, ZeroPolicyOfflineMatchesClean) {
  const auto rep = harness::run_offline_campaign(zeros(), ctx_, cfg_.offline_cases, cfg_.env);
  ASSERT_EQ(rep.rows.size(), cfg_.offline_cases.size() + 1);
  EXPECT_FALSE(rep.rows.front().attacked);
  for (std::size_t c = 1; c < rep.rows.size(); ++c) {
    const auto& r = rep.rows[c];
    EXPECT_TRUE(r.completed);
    EXPECT_EQ(r.dphi_td, 0.0);
    EXPECT_EQ(r.dphi_te, 0.0);
    std::vector<double> clean;
    for (const auto& rec : r.transcript.records) {
      const auto& z = ctx_->dataset->rows[static_cast<std::size_t>(rec.row)].sample.z;
      EXPECT_EQ(rec.z.bess.v_dc, z.bess.v_dc);
      EXPECT_EQ(*rec.verdict.residual_value,
                rep.rows.front().residuals[static_cast<std::size_t>(rec.row)]);
      clean.push_back(rep.rows.front().residuals[static_cast<std::size_t>(rec.row)]);
    }
    EXPECT_EQ(r.residual_median, harness::median(clean));
  }
}

TEST_F(CampaignFixture, ZeroPolicyOnlineHasNoShutdown) {
  const auto rep = harness::run_online_campaign(zeros(), ctx_, cfg_.online_cases, cfg_.env);
  for (const auto& r : rep.rows) EXPECT_EQ(r.shutdown_events, 0) << r.id;
  const auto& kill = rep.rows.back();
  ASSERT_EQ(kill.clean_true_soc.size(), kill.transcript.records.size());
  for (std::size_t k = 0; k < kill.clean_true_soc.size(); ++k)
    EXPECT_EQ(kill.transcript.records[k].true_soc, kill.clean_true_soc[k]);
}

TEST_F(CampaignFixture, MissingPolicyKindIsRejected) {
  harness::PolicySet only_unconstrained;
  only_unconstrained.unconstrained = harness::zero_policy();
  EXPECT_THROW(harness::run_offline_campaign(only_unconstrained, ctx_, cfg_.offline_cases, cfg_.env), Error);
}

TEST_F(CampaignFixture, ExportIsByteStable) {
  auto rep = harness::run_offline_campaign(zeros(), ctx_, cfg_.offline_cases, cfg_.env);
  rep.manifest.config_hash = config::config_hash(cfg_);
  rep.manifest.config = config::to_json(cfg_);
  rep.manifest.tau_se = cal_.thresholds.tau_se;
  const auto a = scratch("export_a"), b = scratch("export_b");
  const auto files = report::export_report(rep, a);
  report::export_report(rep, b);
  for (const auto& f : files) EXPECT_EQ(report::read_text(f), report::read_text(b / fs::relative(f, a))) << f;
  const auto rows = report::read_campaign_csv(a / "campaign_offline.csv");
  ASSERT_EQ(rows.size(), rep.rows.size());
  EXPECT_NEAR(rows[0].residual_median, rep.rows[0].residual_median, 1e-6);
  const auto md = report::summarize(a);
  EXPECT_NE(md.find("every completed case passes"), std::string::npos);
}

TEST_F(CampaignFixture, EmptyCaseListKeepsCleanRowAndManifest) {
  auto rep = harness::run_offline_campaign(zeros(), ctx_, {}, cfg_.env);
  rep.manifest.config_hash = "abc";
  rep.manifest.seed = 3;
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_GT(rep.rows[0].residual_median, 0.0);
  const auto dir = scratch("empty");
  report::export_report(rep, dir);
  const auto m = harness::Manifest::from_json(nlohmann::json::parse(report::read_text(dir / "manifest_offline.json")));
  EXPECT_EQ(m.config_hash, "abc");
  EXPECT_EQ(m.seed, 3u);
  EXPECT_EQ(report::read_campaign_csv(dir / "campaign_offline.csv").size(), 1u);
}

TEST_F(CampaignFixture, UnwritableDestination) {
  auto rep = harness::run_offline_campaign(zeros(), ctx_, {}, cfg_.env);
  try {
    report::export_report(rep, "/proc/sfdia_cannot_write");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST_F(CampaignFixture, AuditCatchesViolations) {
  auto c = cfg_.env;
  c.scale.v = 1000.0;
  harness::PolicySet loud;
  loud.constrained = [](const Eigen::VectorXd&) { return Eigen::Vector2d(900.0, 0.0); };
  auto rep = harness::run_offline_campaign(loud, ctx_, {cfg_.offline_cases.front()}, c);
  const auto& r = rep.rows.back();
  EXPECT_FALSE(r.completed);
  EXPECT_EQ(r.bdd_triggers, 1);
  const auto dir = scratch("audit");
  report::write_transcript(r, dir / "t.csv");
  EXPECT_EQ(report::audit_transcript(dir / "t.csv").size(), 1u);
}
