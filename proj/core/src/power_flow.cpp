#include "sfdia/power_flow.hpp"

#include <cmath>
#include <string>

#include "sfdia/error.hpp"

namespace sfdia::grid {

PowerFlowResult solve_power_flow(const Network& net, std::span<const Complex> injections,
                                 const PowerFlowOptions& options) {
  net.validate();
  require(injections.size() == net.size(), ErrorCode::Contract, "one injection per bus required");
  const int n = static_cast<int>(net.size());
  const int slack = net.slack_index();
  const Eigen::MatrixXcd ybus = net.admittance();

  std::vector<int> pq;
  for (int i = 0; i < n; ++i)
    if (i != slack) pq.push_back(i);
  const int m = static_cast<int>(pq.size());

  Eigen::VectorXcd v = Eigen::VectorXcd::Constant(n, Complex(1.0, 0.0));
  v(slack) = Complex(net.slack_voltage, 0.0);

  Eigen::VectorXd mismatch(2 * m);
  auto evaluate = [&]() {
    const Eigen::VectorXcd s = v.array() * (ybus * v).conjugate().array();
    for (int k = 0; k < m; ++k) {
      const Complex d = injections[pq[k]] - s(pq[k]);
      mismatch(k) = d.real();
      mismatch(m + k) = d.imag();
    }
    return mismatch.lpNorm<Eigen::Infinity>();
  };

  PowerFlowResult result;
  double norm = evaluate();
  int it = 0;
  while (norm > options.tolerance) {
    if (it >= options.max_iterations || !std::isfinite(norm)) {
      throw NonConvergenceError("power flow did not converge after " + std::to_string(it) +
                                    " iterations (mismatch " + std::to_string(norm) + " p.u.)",
                                norm, it);
    }
    const PowerDerivatives d = bus_power_derivatives(ybus, v);
    Eigen::MatrixXd jac(2 * m, 2 * m);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) {
        jac(r, c) = d.ds_dang(pq[r], pq[c]).real();
        jac(r, m + c) = d.ds_dmag(pq[r], pq[c]).real();
        jac(m + r, c) = d.ds_dang(pq[r], pq[c]).imag();
        jac(m + r, m + c) = d.ds_dmag(pq[r], pq[c]).imag();
      }
    }
    const Eigen::VectorXd dx = jac.partialPivLu().solve(mismatch);
    for (int k = 0; k < m; ++k) {
      const int b = pq[k];
      const double ang = std::arg(v(b)) + dx(k);
      const double mag = std::abs(v(b)) + dx(m + k);
      v(b) = std::polar(mag, ang);
    }
    ++it;
    norm = evaluate();
  }

  result.iterations = it;
  result.mismatch = norm;
  result.injections = v.array() * (ybus * v).conjugate().array();
  result.buses.resize(n);
  for (int i = 0; i < n; ++i) result.buses[i] = {std::abs(v(i)), std::arg(v(i))};
  return result;
}

Complex network_losses(const Network& net, const Eigen::VectorXcd& v) {
  Complex loss(0.0);
  for (const auto& l : net.lines) {
    const Complex s_from = v(l.from) * std::conj(line_current(l, v, true));
    const Complex s_to = v(l.to) * std::conj(line_current(l, v, false));
    loss += s_from + s_to;
  }
  return loss;
}

}  // namespace sfdia::grid
