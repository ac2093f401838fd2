// Report files. All numbers are printed with fixed formats and no wall-clock
// data, so re-exporting the same report gives identical bytes.
//
// campaign_<mode>.csv      one row per case, clean reference first:
//   case,attacked,t_s_h,t_d_h,t_e_h,target_pct,dphi_td_pct,dphi_te_pct,
//   residual_median,bdd_triggers,shutdown_events,completed,steps
// transcripts/<mode>_<case>.csv   one row per step:
//   t,row,dv_step,di_step,cum_dv,cum_di,soc_bias_pct,fake_soc,actual_soc,
//   true_soc,clean_true_soc,reported_soc,v_dc,i_dc,residual,soc_discrepancy,
//   bounds_flag,residual_flag,soc_flag,verdict,reward,shutdown,clipped
// residual_hist_<mode>.csv  bin_lo,bin_hi then one count column per case
// manifest_<mode>.json      seeds, config hash, thresholds, embedded config
// reward_curve.csv          episode,return,sliding_mean
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sfdia/campaign.hpp"

namespace sfdia::report {

struct ExportOptions {
  int histogram_bins = 40;
  bool transcripts = true;
};

/// Writes the campaign files into out_dir and returns the paths written.
std::vector<std::filesystem::path> export_report(const harness::CampaignReport& report,
                                                 const std::filesystem::path& out_dir, const ExportOptions& opts = {});

void write_reward_curve(const std::vector<double>& returns, const std::vector<double>& sliding,
                        const std::filesystem::path& path);

void write_transcript(const harness::CaseResult& row, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Campaign CSV parsed back into rows (transcripts and residual lists empty).
std::vector<harness::CaseResult> read_campaign_csv(const std::filesystem::path& path);

/// Re-checks every completed attacked case against its transcript: each
/// step's verdict must pass. Returns one message per violation.
std::vector<std::string> audit_transcript(const std::filesystem::path& path);

/// Markdown summary of offline and online campaign files found in dir.
std::string summarize(const std::filesystem::path& dir);

}  // namespace sfdia::report
