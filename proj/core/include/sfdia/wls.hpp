#pragma once

#include <Eigen/Dense>

#include "sfdia/measurement.hpp"

namespace sfdia::estimation {

struct WlsOptions {
  double tolerance = 1e-6;  // state-update infinity-norm
  int max_iterations = 50;
  double v_dc_nominal = 1800.0;
};

/// residual is the weighted squared norm sum_i w_i (z_i - h_i(x_hat))^2.
struct EstimationResult {
  Eigen::VectorXd x_hat;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double last_step = 0.0;
  Eigen::VectorXd weights_used;
};

/// Gauss-Newton WLS over the augmented state from a flat start (|V| = 1,
/// angles 0, v_dc nominal, m taken from its own measurement). Throws
/// Observability when the gain matrix is singular; a run that exhausts its
/// iterations comes back with converged = false.
EstimationResult wls_estimate(const Eigen::VectorXd& z, const grid::Network& net, const grid::MeteringPlan& plan,
                              const grid::VsiParams& vsi, const Eigen::VectorXd& weights,
                              const WlsOptions& options = {});

double weighted_residual(const Eigen::VectorXd& z, const Eigen::VectorXd& h, const Eigen::VectorXd& weights);

}  // namespace sfdia::estimation
