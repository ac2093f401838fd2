#include "sfdia/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sfdia/error.hpp"

namespace sfdia::report {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string num(double v) { return fmt("%.6f", v); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorCode::Io, "cannot create directory '" + dir.string() + "'");
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string safe_name(const std::string& id) {
  std::string s = id;
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_transcript(const harness::CaseResult& row, const fs::path& path) {
  std::ostringstream os;
  os << "t,row,dv_step,di_step,cum_dv,cum_di,soc_bias_pct,fake_soc,actual_soc,true_soc,clean_true_soc,reported_soc,"
        "v_dc,i_dc,residual,soc_discrepancy,bounds_flag,residual_flag,soc_flag,verdict,reward,shutdown,clipped\n";
  const auto& recs = row.transcript.records;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const auto& r = recs[k];
    const auto& v = r.verdict;
    os << r.t << ',' << r.row << ',' << num(r.attack.dv_step) << ',' << num(r.attack.di_step) << ','
       << num(r.attack.cum_dv) << ',' << num(r.attack.cum_di) << ',' << num(100.0 * r.attack.soc_bias) << ','
       << num(r.fake_soc) << ',' << num(r.actual_soc) << ',' << num(r.true_soc) << ','
       << (k < row.clean_true_soc.size() ? num(row.clean_true_soc[k]) : std::string()) << ',' << num(r.z.bess.soc)
       << ',' << num(r.z.bess.v_dc) << ',' << num(r.z.bess.i_dc) << ','
       << (v.residual_value ? num(*v.residual_value) : std::string()) << ','
       << (v.soc_discrepancy ? num(*v.soc_discrepancy) : std::string()) << ',' << v.flags.bounds << ','
       << v.flags.residual << ',' << v.flags.soc_crossval << ',' << (v.pass ? "pass" : bdd::to_string(v.failed_stage))
       << ',' << num(r.reward) << ',' << r.shutdown << ',' << r.clipped << '\n';
  }
  write_text(path, os.str());
}

std::vector<fs::path> export_report(const harness::CampaignReport& report, const fs::path& out_dir,
                                    const ExportOptions& opts) {
  require(opts.histogram_bins >= 1, ErrorCode::InvalidParameter, "histogram needs at least one bin");
  ensure_dir(out_dir);
  const std::string mode = attack::to_string(report.mode);
  std::vector<fs::path> written;

  std::ostringstream cs;
  cs << "case,attacked,t_s_h,t_d_h,t_e_h,target_pct,dphi_td_pct,dphi_te_pct,residual_median,bdd_triggers,"
        "shutdown_events,completed,steps\n";
  for (const auto& r : report.rows) {
    cs << r.id << ',' << r.attacked << ',' << fmt("%.4f", r.t_s) << ',' << fmt("%.4f", r.t_d) << ','
       << fmt("%.4f", r.t_e) << ',' << (r.target ? fmt("%.4f", 100.0 * *r.target) : std::string()) << ','
       << fmt("%.4f", 100.0 * r.dphi_td) << ',' << fmt("%.4f", 100.0 * r.dphi_te) << ','
       << num(r.residual_median) << ',' << r.bdd_triggers << ',' << r.shutdown_events << ',' << r.completed << ','
       << r.steps_run << '\n';
  }
  written.push_back(out_dir / ("campaign_" + mode + ".csv"));
  write_text(written.back(), cs.str());

  if (opts.transcripts) {
    for (const auto& r : report.rows) {
      if (!r.attacked) continue;
      written.push_back(out_dir / "transcripts" / (mode + "_" + safe_name(r.id) + ".csv"));
      write_transcript(r, written.back());
    }
  }

  double hi = report.manifest.tau_se;
  if (!(hi > 0.0)) {
    for (const auto& r : report.rows)
      for (double x : r.residuals) hi = std::max(hi, x);
  }
  if (!(hi > 0.0)) hi = 1.0;
  const int B = opts.histogram_bins;
  std::ostringstream hs;
  hs << "bin_lo,bin_hi";
  for (const auto& r : report.rows) hs << ',' << r.id;
  hs << '\n';
  std::vector<std::vector<long>> counts(report.rows.size(), std::vector<long>(B + 1, 0));
  for (std::size_t c = 0; c < report.rows.size(); ++c) {
    for (double x : report.rows[c].residuals) {
      const int b = x >= hi ? B : std::max(0, static_cast<int>(x / hi * B));
      ++counts[c][std::min(b, B)];
    }
  }
  for (int b = 0; b <= B; ++b) {
    hs << num(hi * b / B) << ',' << (b < B ? num(hi * (b + 1) / B) : std::string("inf"));
    for (const auto& col : counts) hs << ',' << col[b];
    hs << '\n';
  }
  written.push_back(out_dir / ("residual_hist_" + mode + ".csv"));
  write_text(written.back(), hs.str());

  written.push_back(out_dir / ("manifest_" + mode + ".json"));
  write_text(written.back(), report.manifest.to_json().dump(2) + "\n");
  return written;
}

void write_reward_curve(const std::vector<double>& returns, const std::vector<double>& sliding, const fs::path& path) {
  require(returns.size() == sliding.size(), ErrorCode::InvalidParameter, "reward curve columns differ in length");
  std::ostringstream os;
  os << "episode,return,sliding_mean\n";
  for (std::size_t k = 0; k < returns.size(); ++k) os << k + 1 << ',' << num(returns[k]) << ',' << num(sliding[k]) << '\n';
  write_text(path, os.str());
}

std::vector<harness::CaseResult> read_campaign_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  require(line.rfind("case,attacked,", 0) == 0, ErrorCode::Io, "'" + path.string() + "' is not a campaign file");
  std::vector<harness::CaseResult> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    require(f.size() == 13, ErrorCode::Io, "malformed campaign row in '" + path.string() + "'");
    harness::CaseResult r;
    try {
      r.id = f[0];
      r.attacked = f[1] == "1";
      r.t_s = std::stod(f[2]);
      r.t_d = std::stod(f[3]);
      r.t_e = std::stod(f[4]);
      if (!f[5].empty()) r.target = std::stod(f[5]) / 100.0;
      r.dphi_td = std::stod(f[6]) / 100.0;
      r.dphi_te = std::stod(f[7]) / 100.0;
      r.residual_median = std::stod(f[8]);
      r.bdd_triggers = std::stoi(f[9]);
      r.shutdown_events = std::stoi(f[10]);
      r.completed = f[11] == "1";
      r.steps_run = std::stoi(f[12]);
    } catch (const std::exception&) {
      fail(ErrorCode::Io, "unparsable campaign row in '" + path.string() + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> audit_transcript(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  const auto head = split(line);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(head.begin(), head.end(), name);
    require(it != head.end(), ErrorCode::Io, "transcript '" + path.string() + "' lacks column " + name);
    return static_cast<std::size_t>(it - head.begin());
  };
  const std::size_t cv = col("verdict"), ct = col("t");
  std::vector<std::string> bad;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != head.size()) {
      bad.push_back(path.filename().string() + ": malformed row");
      continue;
    }
    if (f[cv] != "pass") bad.push_back(path.filename().string() + ": step " + f[ct] + " failed at " + f[cv]);
  }
  return bad;
}

std::string summarize(const fs::path& dir) {
  std::ostringstream os;
  bool any = false;
  for (const char* mode : {"offline", "online"}) {
    const auto csv = dir / (std::string("campaign_") + mode + ".csv");
    if (!fs::exists(csv)) continue;
    any = true;
    const auto rows = read_campaign_csv(csv);
    os << "## " << mode << " campaign\n\n";
    const auto man = dir / (std::string("manifest_") + mode + ".json");
    if (fs::exists(man)) {
      const auto m = harness::Manifest::from_json(nlohmann::json::parse(read_text(man)));
      os << "config " << m.config_hash << ", seed " << m.seed << ", tau_SE " << fmt("%.4f", m.tau_se) << ", tau_SoC "
         << fmt("%.4f", m.tau_soc) << "\n\n";
    }
    os << "| case | t_s | t_d | t_e | target % | dphi(t_d) % | dphi(t_e) % | residual median | BDD triggers | shutdowns "
          "| completed |\n";
    os << "|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
      os << "| " << r.id << " | " << (r.attacked ? fmt("%.2f", r.t_s) : "-") << " | "
         << (r.target ? fmt("%.2f", r.t_d) : "-") << " | " << (r.attacked ? fmt("%.2f", r.t_e) : "-") << " | "
         << (r.target ? fmt("%.1f", 100.0 * *r.target) : "-") << " | "
         << (r.target ? fmt("%.2f", 100.0 * r.dphi_td) : "-") << " | "
         << (r.attacked ? fmt("%.2f", 100.0 * r.dphi_te) : "-") << " | " << fmt("%.3f", r.residual_median) << " | "
         << r.bdd_triggers << " | " << r.shutdown_events << " | " << (r.completed ? "yes" : "no") << " |\n";
    }
    std::vector<std::string> issues;
    for (const auto& r : rows) {
      if (!r.attacked || !r.completed) continue;
      const auto tp = dir / "transcripts" / (std::string(mode) + "_" + safe_name(r.id) + ".csv");
      if (!fs::exists(tp)) continue;
      for (auto& s : audit_transcript(tp)) issues.push_back(std::move(s));
    }
    os << "\nstealth audit: " << (issues.empty() ? "every completed case passes at every step" : "violations found")
       << "\n";
    for (const auto& s : issues) os << "- " << s << "\n";
    os << "\n";
  }
  if (!any) os << "no campaign files in " << dir.string() << "\n";
  return os.str();
}

}  // namespace sfdia::report
