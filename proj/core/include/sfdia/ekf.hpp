// Current sign convention: positive current = discharge (battery delivers power).
#pragma once

#include <Eigen/Dense>

#include "sfdia/battery.hpp"

namespace sfdia::estimation {

struct EkfNoise {
  double q_soc = 3e-7;   // per-step SoC process variance
  double q_vrc = 1e-4;   // per-step RC-voltage process variance, V^2
  double r_meas = 324.0; // terminal-voltage variance, V^2 (18 V std)
  double p0_soc = 1e-2;
  double p0_vrc = 1e-2;

  void validate() const;
};

/// Belief over (SoC, v_rc). The internal SoC is left unclamped so the filter
/// stays linear-Gaussian near the edges; soc_hat() reports it clamped.
struct EkfState {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d q_process = Eigen::Matrix2d::Zero();
  double r_meas = 1.0;

  double soc_hat() const;
  double v_rc_hat() const { return x(1); }
};

struct EkfStepResult {
  EkfState state;
  double soc_hat = 0.0;
};

/// Lower bound on dOCV/dSoC used in the measurement Jacobian, V per unit SoC.
inline constexpr double kOcvSlopeFloor = 1e-4;

EkfState ekf_init(double soc0, const battery::PackParams& pack, const Eigen::Matrix2d& q_process, double r_meas,
                  const Eigen::Matrix2d& p0 = Eigen::Vector2d(1e-2, 1e-2).asDiagonal());
EkfState ekf_init(double soc0, const battery::PackParams& pack, const EkfNoise& noise);

/// Predict with Coulomb counting and the exact RC step, then a Joseph-form
/// update against the measured terminal voltage. Throws Numerical if the
/// covariance stops being symmetric positive definite.
EkfStepResult ekf_step(const EkfState& state, double v_dc, double i_dc, double dt, const battery::PackParams& pack);

}  // namespace sfdia::estimation
