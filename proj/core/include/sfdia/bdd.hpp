#pragma once

#include <optional>
#include <vector>

#include "sfdia/battery.hpp"
#include "sfdia/ekf.hpp"
#include "sfdia/measurement.hpp"
#include "sfdia/wls.hpp"

namespace sfdia::bdd {

using battery::Range;

struct ChannelBounds {
  std::vector<Range> scada;  // one per SCADA channel of the metering plan
  Range v_dc;
  Range i_dc;
  Range mod_index{0.0, 1.0};
  Range soc{0.15, 0.95};
  bool soc_enabled = true;  // switched off while training

  void validate() const;
  /// Voltage magnitudes 0.9..1.1 p.u., angles +-0.5 rad, currents and powers
  /// +-2 p.u.; BESS ranges from the pack ratings.
  static ChannelBounds defaults(const grid::MeteringPlan& plan, const battery::PackParams& pack);
};

struct Thresholds {
  double tau_se = 0.0;
  double tau_soc = 0.0;
  ChannelBounds bounds;

  void validate() const;
};

/// true marks a channel strictly outside its range.
struct BoundsFlags {
  std::vector<bool> scada;
  bool v_dc = false;
  bool i_dc = false;
  bool mod_index = false;
  bool soc = false;

  bool any() const;
};

BoundsFlags check_bounds(const grid::MeasurementSet& z, const ChannelBounds& bounds);

enum class ResidualStatus { Pass, Exceeded, NotConverged };

ResidualStatus check_residual(const estimation::EstimationResult& result, double tau_se);

/// true when |soc_hat - soc_reported| > tau_soc.
bool check_soc_crossval(double soc_reported, double soc_hat, double tau_soc);

struct CalibrationSample {
  double residual = 0.0;
  double soc_reported = 0.0;
  double soc_hat = 0.0;
};

struct CalibrationRule {
  double fraction = 0.99;  // of the clean-window maximum
  double soc_floor = 0.01;
};

Thresholds calibrate_thresholds(const std::vector<CalibrationSample>& clean_run, const CalibrationRule& rule,
                                const ChannelBounds& bounds);

enum class Stage { None, Bounds, Residual, SocCrossval };

struct StageFlags {
  bool bounds = false;
  bool residual = false;
  bool soc_crossval = false;
};

/// Stages that did not run leave their value empty.
struct BddVerdict {
  bool pass = true;
  StageFlags flags;
  Stage failed_stage = Stage::None;
  ResidualStatus residual_status = ResidualStatus::Pass;
  std::optional<double> residual_value;
  std::optional<double> soc_discrepancy;

  int f_bdd() const { return pass ? 0 : 1; }
};

/// Everything the control centre needs to screen a measurement set.
struct DetectorModel {
  grid::Network net;
  grid::MeteringPlan plan;
  grid::VsiParams vsi;
  Eigen::VectorXd weights;
  estimation::WlsOptions wls;
  battery::PackParams pack;
  double dt = 60.0;
};

struct DetectOutput {
  BddVerdict verdict;
  estimation::EkfState ekf_cc;
};

/// Bounds, then WLS + residual, then cross-validation, stopping at the first
/// failure. The control-centre EKF consumes the received v_dc, i_dc and is
/// advanced exactly once whatever the outcome.
DetectOutput detect(const grid::MeasurementSet& z, const DetectorModel& model, const Thresholds& thresholds,
                    const estimation::EkfState& ekf_cc);

const char* to_string(Stage stage);
const char* to_string(ResidualStatus status);

}  // namespace sfdia::bdd
