// Current sign convention: BESS telemetry i_dc is positive when the battery
// discharges. vsi_couple() takes the DC-link current flowing INTO the battery.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfdia/network.hpp"

namespace sfdia::grid {

/// Converter average-model parameters. ac_base_volts is the AC-side voltage
/// that corresponds to 1 p.u. at the BESS bus.
struct VsiParams {
  double r_ac = 0.01166;  // ohm; ~1 % of 3 MW at rated AC current
  double r_dc = 216.0;    // ohm; ~0.5 % of 3 MW at 1800 V
  double ac_base_volts = 1080.0;

  void validate() const;
};

struct VsiOutput {
  double v_r = 0.0;     // converter AC voltage, V
  double p_dc = 0.0;    // W, power absorbed by the DC side
  double p_loss = 0.0;  // W
  double p_ri = 0.0;    // W, power delivered to the AC bus
};

/// Average VSI model: v_r = m v_dc / sqrt(2), p_dc = v_dc i_dc,
/// p_loss = i_ri^2 r_ac + v_dc^2 / r_dc, and p_ri + p_dc + p_loss = 0.
/// i_dc_into_battery is positive while charging; i_ri is the AC current (A).
VsiOutput vsi_couple(double mod_index, double v_dc, double i_dc_into_battery, const VsiParams& params, double i_ri);

enum class NoiseClass { Magnitude, Phasor, Power };

enum class ChannelKind {
  VMag,
  VAng,
  LineIReal,
  LineIImag,
  PInj,
  QInj,
  PFlow,
  QFlow,
  ConverterVoltage,  // m v_dc / sqrt(2), volts
};

struct Channel {
  ChannelKind kind = ChannelKind::VMag;
  int index = 0;         // bus index, or line index for line channels
  bool at_from = true;   // which end of the line is metered
  NoiseClass noise = NoiseClass::Power;
  double full_scale = 1.0;

  std::string label(const Network& net) const;
};

/// SCADA channels in the order they appear in the measurement vector. The
/// BESS channels v_dc, i_dc and m always follow, in that order.
struct MeteringPlan {
  std::vector<Channel> scada;
  double vdc_full_scale = 1800.0;
  double idc_full_scale = 1667.0;
  double mod_full_scale = 1.0;

  std::size_t size() const { return scada.size() + 3; }
  std::size_t vdc_slot() const { return scada.size(); }
  std::size_t idc_slot() const { return scada.size() + 1; }
  std::size_t mod_slot() const { return scada.size() + 2; }
  std::vector<std::string> labels(const Network& net) const;

  /// PMU-style voltage and line-1 current phasor at bus 2, P/Q injection at
  /// every bus and P/Q flow at both ends of every line.
  static MeteringPlan default_plan(const Network& net);
};

struct NoiseSpec {
  double sigma_mag = 0.01;
  double sigma_phasor = 0.005;
  double sigma_power = 0.02;
  std::uint64_t seed = 1;

  double relative(NoiseClass c) const;
  void validate() const;
};

/// Per-channel standard deviations (absolute units) and the WLS weights 1/sigma^2.
Eigen::VectorXd channel_sigmas(const MeteringPlan& plan, const NoiseSpec& noise);
Eigen::VectorXd channel_weights(const MeteringPlan& plan, const NoiseSpec& noise);

enum class Provenance { Clean, Falsified };

struct BessTelemetry {
  double v_dc = 0.0;
  double i_dc = 0.0;
  double mod_index = 0.0;
  double soc = 0.0;
};

struct MeasurementSet {
  std::vector<double> scada;
  BessTelemetry bess;
  double timestamp = 0.0;  // simulated seconds
  Provenance provenance = Provenance::Clean;

  /// z for state estimation: scada channels then v_dc, i_dc, m (no SoC).
  Eigen::VectorXd se_vector() const;
  bool finite() const;
};

/// Augmented estimator state: angles and magnitudes of every non-slack bus,
/// then v_dc (V) and modulation index. The slack (grid-forming BESS) bus
/// voltage follows from v_r = m v_dc / sqrt(2) at angle zero.
class StateLayout {
 public:
  explicit StateLayout(const Network& net);

  Eigen::Index size() const { return static_cast<Eigen::Index>(2 * nonslack_.size() + 2); }
  Eigen::Index angle_slot(int bus) const;  // -1 for the slack bus
  Eigen::Index mag_slot(int bus) const;
  Eigen::Index vdc_slot() const { return size() - 2; }
  Eigen::Index mod_slot() const { return size() - 1; }
  int slack() const { return slack_; }
  const std::vector<int>& nonslack() const { return nonslack_; }

  Eigen::VectorXd pack(const std::vector<BusState>& buses, double v_dc, double mod_index) const;
  Eigen::VectorXcd phasors(const Eigen::VectorXd& x, const VsiParams& vsi) const;

 private:
  int slack_ = 0;
  std::vector<int> nonslack_;
  std::vector<Eigen::Index> slot_;
};

/// Noiseless SCADA channel values for the given bus voltages.
std::vector<double> scada_values(const Eigen::VectorXcd& v, const MeteringPlan& plan, const Network& net);

/// Predicted DC current (discharge positive) from the AC-side solution via
/// the VSI power balance.
double predicted_idc(const Eigen::VectorXcd& v, double v_dc, const Network& net, const VsiParams& vsi);

/// Measurement function h(x) over the full plan (scada + v_dc, i_dc, m).
Eigen::VectorXd h_eval(const Eigen::VectorXd& x, const Network& net, const MeteringPlan& plan, const VsiParams& vsi);

/// Analytic Jacobian dh/dx.
Eigen::MatrixXd h_jacobian(const Eigen::VectorXd& x, const Network& net, const MeteringPlan& plan, const VsiParams& vsi);

/// Adds zero-mean Gaussian noise per channel class to the model-predicted
/// values. The reported SoC is an estimator output and passes through as is.
MeasurementSet synthesize_measurements(const std::vector<BusState>& buses, const BessTelemetry& bess_truth,
                                       const MeteringPlan& plan, const Network& net, const NoiseSpec& noise,
                                       std::mt19937_64& rng, double timestamp = 0.0);

}  // namespace sfdia::grid
