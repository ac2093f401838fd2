#include "sfdia/bdd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sfdia/error.hpp"

namespace sfdia::bdd {

namespace {

bool ordered(const Range& r) { return std::isfinite(r.min) && std::isfinite(r.max) && r.min < r.max; }

}  // namespace

void ChannelBounds::validate() const {
  for (const auto& r : scada) require(ordered(r), ErrorCode::Config, "SCADA bounds must be finite and ordered");
  require(ordered(v_dc) && ordered(i_dc) && ordered(mod_index) && ordered(soc), ErrorCode::Config,
          "BESS bounds must be finite and ordered");
}

ChannelBounds ChannelBounds::defaults(const grid::MeteringPlan& plan, const battery::PackParams& pack) {
  ChannelBounds b;
  for (const auto& c : plan.scada) {
    switch (c.kind) {
      case grid::ChannelKind::VMag: b.scada.push_back({0.9, 1.1}); break;
      case grid::ChannelKind::VAng: b.scada.push_back({-0.5, 0.5}); break;
      case grid::ChannelKind::ConverterVoltage: b.scada.push_back({0.0, pack.vdc_range.max / std::sqrt(2.0)}); break;
      default: b.scada.push_back({-2.0, 2.0}); break;
    }
  }
  b.v_dc = pack.vdc_range;
  b.i_dc = pack.idc_range;
  return b;
}

void Thresholds::validate() const {
  require(tau_se > 0.0, ErrorCode::Config, "tau_se must be positive");
  require(tau_soc > 0.0, ErrorCode::Config, "tau_soc must be positive");
  bounds.validate();
}

bool BoundsFlags::any() const {
  return v_dc || i_dc || mod_index || soc || std::any_of(scada.begin(), scada.end(), [](bool f) { return f; });
}

BoundsFlags check_bounds(const grid::MeasurementSet& z, const ChannelBounds& bounds) {
  if (bounds.scada.size() != z.scada.size())
    fail(ErrorCode::Config, "bounds cover " + std::to_string(bounds.scada.size()) + " SCADA channels, measurement has " +
                                std::to_string(z.scada.size()));
  BoundsFlags f;
  f.scada.resize(z.scada.size());
  for (std::size_t i = 0; i < z.scada.size(); ++i) f.scada[i] = !bounds.scada[i].contains(z.scada[i]);
  f.v_dc = !bounds.v_dc.contains(z.bess.v_dc);
  f.i_dc = !bounds.i_dc.contains(z.bess.i_dc);
  f.mod_index = !bounds.mod_index.contains(z.bess.mod_index);
  f.soc = bounds.soc_enabled && !bounds.soc.contains(z.bess.soc);
  return f;
}

ResidualStatus check_residual(const estimation::EstimationResult& result, double tau_se) {
  if (!result.converged) return ResidualStatus::NotConverged;
  return result.residual <= tau_se ? ResidualStatus::Pass : ResidualStatus::Exceeded;
}

bool check_soc_crossval(double soc_reported, double soc_hat, double tau_soc) {
  return !(std::abs(soc_hat - soc_reported) <= tau_soc);
}

Thresholds calibrate_thresholds(const std::vector<CalibrationSample>& clean_run, const CalibrationRule& rule,
                                const ChannelBounds& bounds) {
  require(!clean_run.empty(), ErrorCode::InvalidParameter, "calibration window is empty");
  require(rule.fraction > 0.0 && rule.soc_floor >= 0.0, ErrorCode::InvalidParameter, "invalid calibration rule");
  double max_res = 0.0;
  double max_soc = 0.0;
  for (const auto& s : clean_run) {
    require(std::isfinite(s.residual) && s.residual >= 0.0, ErrorCode::InvalidParameter,
            "calibration residuals must be finite and non-negative");
    max_res = std::max(max_res, s.residual);
    max_soc = std::max(max_soc, std::abs(s.soc_hat - s.soc_reported));
  }
  Thresholds t;
  t.tau_se = std::max(rule.fraction * max_res, std::numeric_limits<double>::min());
  t.tau_soc = std::max({rule.fraction * max_soc, rule.soc_floor, std::numeric_limits<double>::min()});
  t.bounds = bounds;
  return t;
}

DetectOutput detect(const grid::MeasurementSet& z, const DetectorModel& model, const Thresholds& thresholds,
                    const estimation::EkfState& ekf_cc) {
  DetectOutput out;
  out.ekf_cc = estimation::ekf_step(ekf_cc, z.bess.v_dc, z.bess.i_dc, model.dt, model.pack).state;
  BddVerdict& v = out.verdict;

  if (check_bounds(z, thresholds.bounds).any()) {
    v.pass = false;
    v.flags.bounds = true;
    v.failed_stage = Stage::Bounds;
    return out;
  }

  try {
    const auto est =
        estimation::wls_estimate(z.se_vector(), model.net, model.plan, model.vsi, model.weights, model.wls);
    v.residual_value = est.residual;
    v.residual_status = check_residual(est, thresholds.tau_se);
  } catch (const Error& e) {
    // A blown-up estimate is a detection, not a way out of the detector.
    if (e.code() != ErrorCode::Numerical) throw Error(e.code(), std::string("residual stage: ") + e.what());
    v.residual_status = ResidualStatus::NotConverged;
  }
  if (v.residual_status != ResidualStatus::Pass) {
    v.pass = false;
    v.flags.residual = true;
    v.failed_stage = Stage::Residual;
    return out;
  }

  const double soc_hat = out.ekf_cc.soc_hat();
  v.soc_discrepancy = std::abs(soc_hat - z.bess.soc);
  if (check_soc_crossval(z.bess.soc, soc_hat, thresholds.tau_soc)) {
    v.pass = false;
    v.flags.soc_crossval = true;
    v.failed_stage = Stage::SocCrossval;
  }
  return out;
}

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::None: return "none";
    case Stage::Bounds: return "bounds";
    case Stage::Residual: return "residual";
    case Stage::SocCrossval: return "soc_crossval";
  }
  return "?";
}

const char* to_string(ResidualStatus status) {
  switch (status) {
    case ResidualStatus::Pass: return "pass";
    case ResidualStatus::Exceeded: return "exceeded";
    case ResidualStatus::NotConverged: return "not_converged";
  }
  return "?";
}

}  // namespace sfdia::bdd
