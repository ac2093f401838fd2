#include "sfdia/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sfdia/error.hpp"

namespace sfdia::plant {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> fixed_columns() {
  return {"step", "timestamp", "pv_avail_w", "load_w", "pv_used_w", "load_served_w"};
}

std::vector<std::string> tail_columns() {
  return {"v_dc",          "i_dc",         "mod_index",     "soc_reported",  "true_v_dc",
          "true_i_dc",     "true_mod",     "true_soc",      "true_v_rc",     "true_saturated",
          "start_soc",     "start_v_rc",   "start_ekf_soc", "start_ekf_vrc", "start_ekf_p00",
          "start_ekf_p01", "start_ekf_p11", "start_reported", "start_cmd_setpoint_w", "start_cmd_curtailment",
          "start_cmd_shed", "start_cmd_issued_at", "cmd_setpoint_w", "cmd_curtailment", "cmd_shed",
          "cmd_issued_at", "shutdown"};
}

}  // namespace

Profiles Dataset::profiles() const {
  std::vector<double> pv, load;
  pv.reserve(rows.size());
  load.reserve(rows.size());
  for (const auto& r : rows) {
    pv.push_back(r.sample.pv_avail_w);
    load.push_back(r.sample.load_w);
  }
  return Profiles(std::move(pv), std::move(load), rows.empty() ? 0 : rows.front().sample.step);
}

Dataset Dataset::slice_days(int first_day, int n_days) const {
  require(first_day >= 0 && n_days >= 1 && first_day + n_days <= days, ErrorCode::InvalidParameter,
          "day slice outside the dataset");
  const std::size_t per_day = rows.size() / static_cast<std::size_t>(days);
  Dataset out = *this;
  out.days = n_days;
  out.rows.assign(rows.begin() + static_cast<long>(first_day * per_day),
                  rows.begin() + static_cast<long>((first_day + n_days) * per_day));
  return out;
}

Dataset generate_dataset(const PlantConfig& config, int days, std::uint64_t seed) {
  require(days >= 1, ErrorCode::InvalidParameter, "dataset needs at least one day");
  Plant plant(config, Profiles(config.profiles, days, config.dt, seed), seed);
  Dataset ds;
  ds.days = days;
  ds.seed = seed;
  ds.dt = config.dt;
  const long n = static_cast<long>(days) * config.steps_per_day();
  ds.rows.reserve(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k) {
    DatasetRow row;
    row.start = plant.snapshot();
    try {
      row.sample = plant.step();
    } catch (const Error& e) {
      fail(ErrorCode::Config, "infeasible scenario at step " + std::to_string(k) + ": " + e.what());
    }
    if (row.sample.shutdown.shutdown)
      fail(ErrorCode::Config, "infeasible scenario: clean operation shuts down at step " + std::to_string(k) + " (" +
                                  row.sample.shutdown.reason + ")");
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

void write_dataset_csv(const Dataset& ds, const PlantConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write dataset to " + path.string());
  out << "# generator=" << ds.generator_version << " days=" << ds.days << " seed=" << ds.seed
      << " dt=" << fmt_double(ds.dt) << "\n";
  std::vector<std::string> header = fixed_columns();
  for (const auto& l : config.plan.labels(config.net)) {
    if (l == "V_dc" || l == "I_dc" || l == "m") continue;
    header.push_back(l);
  }
  for (const auto& c : tail_columns()) header.push_back(c);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& r : ds.rows) {
    const auto& s = r.sample;
    std::vector<double> vals = {static_cast<double>(s.step), s.timestamp, s.pv_avail_w, s.load_w, s.pv_used_w,
                                s.load_served_w};
    vals.insert(vals.end(), s.z.scada.begin(), s.z.scada.end());
    const auto& p = r.start.bms_ekf.covariance;
    const std::vector<double> tail = {s.z.bess.v_dc,
                                      s.z.bess.i_dc,
                                      s.z.bess.mod_index,
                                      s.z.bess.soc,
                                      s.truth.v_dc,
                                      s.truth.i_dc,
                                      s.truth.mod_index,
                                      s.battery.soc,
                                      s.battery.v_rc,
                                      s.battery.saturated ? 1.0 : 0.0,
                                      r.start.battery.soc,
                                      r.start.battery.v_rc,
                                      r.start.bms_ekf.x(0),
                                      r.start.bms_ekf.x(1),
                                      p(0, 0),
                                      p(0, 1),
                                      p(1, 1),
                                      r.start.last_reported_soc,
                                      r.start.command.bess_power_setpoint,
                                      r.start.command.pv_curtailment,
                                      r.start.command.shed_noncritical ? 1.0 : 0.0,
                                      r.start.command.issued_at,
                                      s.command.bess_power_setpoint,
                                      s.command.pv_curtailment,
                                      s.command.shed_noncritical ? 1.0 : 0.0,
                                      s.command.issued_at,
                                      s.shutdown.shutdown ? 1.0 : 0.0};
    vals.insert(vals.end(), tail.begin(), tail.end());
    for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << fmt_double(vals[i]);
    out << "\n";
  }
  if (!out) fail(ErrorCode::Io, "failed while writing " + path.string());
}

Dataset read_dataset_csv(const PlantConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read dataset " + path.string());
  Dataset ds;
  std::string line;
  std::getline(in, line);
  {
    char gen[64] = {0};
    unsigned long long seed = 0;
    if (std::sscanf(line.c_str(), "# generator=%63s days=%d seed=%llu dt=%lf", gen, &ds.days, &seed, &ds.dt) != 4)
      fail(ErrorCode::Io, "dataset " + path.string() + " has no valid preamble");
    ds.generator_version = gen;
    ds.seed = seed;
  }
  std::getline(in, line);
  const std::size_t n_scada = config.plan.scada.size();
  const std::size_t n_cols = fixed_columns().size() + n_scada + tail_columns().size();
  std::vector<double> vals;
  const auto& pack = config.pack;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    vals.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
    if (vals.size() != n_cols)
      fail(ErrorCode::Io, "dataset row " + std::to_string(ds.rows.size()) + " has " + std::to_string(vals.size()) +
                              " columns, expected " + std::to_string(n_cols));
    DatasetRow r;
    auto& s = r.sample;
    std::size_t c = 0;
    s.step = static_cast<long>(vals[c++]);
    s.timestamp = vals[c++];
    s.pv_avail_w = vals[c++];
    s.load_w = vals[c++];
    s.pv_used_w = vals[c++];
    s.load_served_w = vals[c++];
    s.z.scada.assign(vals.begin() + static_cast<long>(c), vals.begin() + static_cast<long>(c + n_scada));
    c += n_scada;
    s.z.timestamp = s.timestamp;
    s.z.bess = {vals[c], vals[c + 1], vals[c + 2], vals[c + 3]};
    c += 4;
    s.truth = {vals[c], vals[c + 1], vals[c + 2], s.z.bess.soc};
    c += 3;
    s.battery.soc = vals[c++];
    s.battery.v_rc = vals[c++];
    s.battery.saturated = vals[c++] != 0.0;
    s.battery.clock = s.timestamp;
    r.start.step = s.step;
    r.start.battery.soc = vals[c++];
    r.start.battery.v_rc = vals[c++];
    r.start.battery.clock = s.timestamp - ds.dt;
    r.start.bms_ekf = estimation::ekf_init(0.5, pack, config.ekf);
    r.start.bms_ekf.x << vals[c], vals[c + 1];
    c += 2;
    r.start.bms_ekf.covariance << vals[c], vals[c + 1], vals[c + 1], vals[c + 2];
    c += 3;
    r.start.last_reported_soc = vals[c++];
    r.start.command.bess_power_setpoint = vals[c++];
    r.start.command.pv_curtailment = vals[c++];
    r.start.command.shed_noncritical = vals[c++] != 0.0;
    r.start.command.issued_at = vals[c++];
    s.command.bess_power_setpoint = vals[c++];
    s.command.pv_curtailment = vals[c++];
    s.command.shed_noncritical = vals[c++] != 0.0;
    s.command.issued_at = vals[c++];
    s.shutdown.shutdown = vals[c++] != 0.0;
    if (!ds.rows.empty())
      require(s.timestamp > ds.rows.back().sample.timestamp, ErrorCode::Io, "dataset timestamps must increase");
    ds.rows.push_back(std::move(r));
  }
  require(!ds.rows.empty(), ErrorCode::Io, "dataset " + path.string() + " has no rows");
  return ds;
}

}  // namespace sfdia::plant
