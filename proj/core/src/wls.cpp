#include "sfdia/wls.hpp"

#include <cmath>
#include <string>

#include "sfdia/error.hpp"

namespace sfdia::estimation {

double weighted_residual(const Eigen::VectorXd& z, const Eigen::VectorXd& h, const Eigen::VectorXd& weights) {
  return (weights.array() * (z - h).array().square()).sum();
}

EstimationResult wls_estimate(const Eigen::VectorXd& z, const grid::Network& net, const grid::MeteringPlan& plan,
                              const grid::VsiParams& vsi, const Eigen::VectorXd& weights, const WlsOptions& options) {
  const grid::StateLayout layout(net);
  const auto nz = static_cast<Eigen::Index>(plan.size());
  require(z.size() == nz && weights.size() == nz, ErrorCode::Contract,
          "measurement vector has " + std::to_string(z.size()) + " entries, plan expects " + std::to_string(nz));
  if (nz <= layout.size())
    fail(ErrorCode::Observability, "no measurement redundancy: " + std::to_string(nz) + " channels for " +
                                       std::to_string(layout.size()) + " states");
  require((weights.array() > 0.0).all(), ErrorCode::InvalidParameter, "WLS weights must be positive");

  Eigen::VectorXd x(layout.size());
  for (int b : layout.nonslack()) {
    x(layout.angle_slot(b)) = 0.0;
    x(layout.mag_slot(b)) = 1.0;
  }
  x(layout.vdc_slot()) = options.v_dc_nominal;
  x(layout.mod_slot()) = z(static_cast<Eigen::Index>(plan.mod_slot()));

  // Scale v_dc to volts/full-scale so the gain matrix stays well conditioned.
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(layout.size());
  scale(layout.vdc_slot()) = plan.vdc_full_scale;

  EstimationResult result;
  result.weights_used = weights;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::VectorXd r = z - grid::h_eval(x, net, plan, vsi);
    const Eigen::MatrixXd jac = grid::h_jacobian(x, net, plan, vsi) * scale.asDiagonal();
    const Eigen::MatrixXd gain = jac.transpose() * weights.asDiagonal() * jac;
    const Eigen::LLT<Eigen::MatrixXd> llt(gain);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::Observability, "WLS gain matrix is not positive definite (iteration " + std::to_string(it) + ")");
    const Eigen::VectorXd dx = scale.asDiagonal() * llt.solve(jac.transpose() * (weights.asDiagonal() * r));
    if (!dx.allFinite()) fail(ErrorCode::Numerical, "WLS update is not finite");
    x += dx;
    result.iterations = it;
    Eigen::VectorXd scaled_step = dx.cwiseQuotient(scale);
    result.last_step = scaled_step.lpNorm<Eigen::Infinity>();
    if (result.last_step <= options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.x_hat = x;
  result.residual = weighted_residual(z, grid::h_eval(x, net, plan, vsi), weights);
  return result;
}

}  // namespace sfdia::estimation
