#pragma once

#include <span>
#include <vector>

#include "sfdia/network.hpp"

namespace sfdia::grid {

struct PowerFlowOptions {
  double tolerance = 1e-8;  // mismatch infinity-norm, p.u.
  int max_iterations = 50;
};

struct PowerFlowResult {
  std::vector<BusState> buses;
  Eigen::VectorXcd injections;  // solved complex injections, p.u. (slack included)
  int iterations = 0;
  double mismatch = 0.0;
};

/// Newton-Raphson load flow in polar form. `injections` holds the scheduled
/// complex power injection (generation positive) of every bus in p.u.; the
/// entry of the slack bus is ignored. Throws NonConvergenceError.
PowerFlowResult solve_power_flow(const Network& net, std::span<const Complex> injections,
                                 const PowerFlowOptions& options = {});

/// Total series + shunt losses of a solved state, p.u.
Complex network_losses(const Network& net, const Eigen::VectorXcd& v);

}  // namespace sfdia::grid
