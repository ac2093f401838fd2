#include "sfdia/network.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "sfdia/error.hpp"

namespace sfdia::grid {

int Network::slack_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].kind == BusKind::Slack || buses[i].kind == BusKind::Bess) return static_cast<int>(i);
  return -1;
}

namespace {
int first_of(const Network& net, BusKind kind) {
  for (std::size_t i = 0; i < net.buses.size(); ++i)
    if (net.buses[i].kind == kind) return static_cast<int>(i);
  return -1;
}
}  // namespace

int Network::bess_index() const { return first_of(*this, BusKind::Bess); }
int Network::pv_index() const { return first_of(*this, BusKind::PvFarm); }

int Network::load_index() const {
  // Aggregated load sits on the last PQ bus.
  for (int i = static_cast<int>(buses.size()) - 1; i >= 0; --i)
    if (buses[i].kind == BusKind::PQ) return i;
  return -1;
}

void Network::validate() const {
  require(buses.size() >= 2, ErrorCode::InvalidParameter, "network needs at least two buses");
  require(base_mva > 0.0, ErrorCode::InvalidParameter, "base_mva must be positive");
  int slack_count = 0;
  for (const auto& b : buses)
    if (b.kind == BusKind::Slack || b.kind == BusKind::Bess) ++slack_count;
  require(slack_count == 1, ErrorCode::InvalidParameter, "network must have exactly one slack (or grid-forming BESS) bus");
  const int n = static_cast<int>(buses.size());
  std::vector<std::vector<int>> adj(n);
  for (const auto& l : lines) {
    require(l.from >= 0 && l.from < n && l.to >= 0 && l.to < n && l.from != l.to, ErrorCode::InvalidParameter,
            "line endpoints out of range");
    require(std::abs(l.z) > 0.0, ErrorCode::InvalidParameter, "line impedance must be nonzero");
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        q.push(v);
      }
  }
  require(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }), ErrorCode::InvalidParameter,
          "network graph is not connected");
}

Eigen::MatrixXcd Network::admittance() const {
  const auto n = static_cast<Eigen::Index>(buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& l : lines) {
    const Complex ys = 1.0 / l.z;
    const Complex ysh(0.0, l.shunt_b / 2.0);
    y(l.from, l.from) += ys + ysh;
    y(l.to, l.to) += ys + ysh;
    y(l.from, l.to) -= ys;
    y(l.to, l.from) -= ys;
  }
  return y;
}

Network Network::five_bus() {
  Network net;
  net.base_mva = 5.0;
  net.buses = {{1, BusKind::Bess, 12.47}, {2, BusKind::PQ, 12.47}, {3, BusKind::PvFarm, 12.47},
               {4, BusKind::PQ, 12.47},   {5, BusKind::PQ, 12.47}};
  const Complex z(0.01, 0.03);
  net.lines = {{0, 1, z, 0.0}, {1, 2, z, 0.0}, {1, 3, z, 0.0}, {3, 4, z, 0.0}};
  return net;
}

std::string to_string(BusKind kind) {
  switch (kind) {
    case BusKind::Slack: return "slack";
    case BusKind::PQ: return "PQ";
    case BusKind::PvFarm: return "PV-farm";
    case BusKind::Bess: return "BESS";
  }
  return "?";
}

BusKind bus_kind_from_string(const std::string& s) {
  if (s == "slack") return BusKind::Slack;
  if (s == "PQ") return BusKind::PQ;
  if (s == "PV-farm") return BusKind::PvFarm;
  if (s == "BESS") return BusKind::Bess;
  fail(ErrorCode::Config, "unknown bus type '" + s + "'");
}

Complex line_current(const Line& line, const Eigen::VectorXcd& v, bool at_from) {
  const Complex ys = 1.0 / line.z;
  const Complex ysh(0.0, line.shunt_b / 2.0);
  if (at_from) return ys * (v(line.from) - v(line.to)) + ysh * v(line.from);
  return ys * (v(line.to) - v(line.from)) + ysh * v(line.to);
}

Eigen::VectorXcd to_phasors(const std::vector<BusState>& states) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) v(static_cast<Eigen::Index>(i)) = std::polar(states[i].v_mag, states[i].v_ang);
  return v;
}

}  // namespace sfdia::grid

namespace sfdia::grid {

PowerDerivatives bus_power_derivatives(const Eigen::MatrixXcd& ybus, const Eigen::VectorXcd& v) {
  const Eigen::VectorXcd ibus = ybus * v;
  const Eigen::VectorXcd vnorm = v.array() / v.array().abs().cast<Complex>();
  const auto n = v.size();
  PowerDerivatives d;
  d.ds_dang.resize(n, n);
  d.ds_dmag.resize(n, n);
  const Complex j(0.0, 1.0);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const Complex diag_i = r == c ? ibus(r) : Complex(0.0);
      d.ds_dang(r, c) = j * v(r) * std::conj(diag_i - ybus(r, c) * v(c));
      d.ds_dmag(r, c) = v(r) * std::conj(ybus(r, c) * vnorm(c)) + (r == c ? std::conj(ibus(r)) * vnorm(r) : Complex(0.0));
    }
  }
  return d;
}

}  // namespace sfdia::grid
