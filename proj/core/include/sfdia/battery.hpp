// Current sign convention: positive current = discharge (battery delivers power).
#pragma once

#include <span>
#include <vector>

namespace sfdia::battery {

/// Piecewise-linear open-circuit-voltage lookup, strictly increasing in SoC.
/// Evaluation outside [0, 1] extrapolates along the end segments.
class OcvCurve {
 public:
  OcvCurve() = default;
  OcvCurve(std::vector<double> soc, std::vector<double> volts);

  double operator()(double soc) const;
  /// dOCV/dSoC of the segment containing soc (right-continuous at knots).
  double slope(double soc) const;
  OcvCurve scaled(double factor) const;

  const std::vector<double>& soc_points() const { return soc_; }
  const std::vector<double>& volt_points() const { return volts_; }

  /// Cell-level curve with a shallow plateau between 15 % and 35 % SoC.
  static OcvCurve default_cell();

 private:
  std::size_t segment(double soc) const;

  std::vector<double> soc_;
  std::vector<double> volts_;
};

struct CellParams {
  double r0 = 1.3e-3;        // ohm
  double ri = 4.2e-3;        // ohm
  double ci = 17111.0;       // farad
  double capacity_ah = 68.03;
  OcvCurve ocv = OcvCurve::default_cell();

  void validate() const;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool contains(double v) const { return v >= min && v <= max; }
};

struct PackParams {
  CellParams cell;
  int n_series = 1;
  int n_parallel = 1;
  double r0 = 0.0;
  double ri = 0.0;
  double ci = 0.0;
  double capacity_ah = 0.0;
  double nominal_voltage = 1800.0;
  double nominal_current = 1667.0;
  Range vdc_range{1607.0, 2100.0};
  Range idc_range{-1867.0, 1867.0};
  OcvCurve ocv;

  double time_constant() const { return ri * ci; }
};

/// Scales a cell to an n_series x n_parallel pack. Bounds default to the
/// 3 MW / 12 MWh BESS ratings.
PackParams build_pack(const CellParams& cell, int n_series, int n_parallel);

/// The 492s x 98p pack of the 3 MW / 12 MWh reference BESS.
PackParams reference_pack();

struct BatteryState {
  double soc = 0.5;
  double v_rc = 0.0;
  double clock = 0.0;
  bool saturated = false;  // soc hit 0 or 1 on the last step
};

BatteryState step_dynamics(const BatteryState& state, double current, double dt, const PackParams& pack);

double terminal_voltage(const BatteryState& state, double current, const PackParams& pack);

/// Shared Coulomb-counting update; step_dynamics and coulomb_oracle both use it.
double coulomb_update(double soc, double current, double dt, double capacity_ah);

/// Pure Coulomb-counting trajectory (no RC branch). Element k is the SoC after
/// currents[k] has been applied for dt seconds.
std::vector<double> coulomb_oracle(double soc0, std::span<const double> currents, double dt, const PackParams& pack);

}  // namespace sfdia::battery
