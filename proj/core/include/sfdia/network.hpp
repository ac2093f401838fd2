#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfdia::grid {

using Complex = std::complex<double>;

/// Slack is a stiff source; Bess is the grid-forming converter bus, which acts
/// as slack in islanded operation. PQ and PvFarm buses carry scheduled P, Q.
enum class BusKind { Slack, PQ, PvFarm, Bess };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double base_kv = 12.47;
};

struct Line {
  int from = 0;  // bus index, not id
  int to = 0;
  Complex z{0.01, 0.03};  // series impedance, p.u.
  double shunt_b = 0.0;   // total line charging susceptance, p.u.
};

struct Network {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  double base_mva = 5.0;
  double slack_voltage = 1.0;

  std::size_t size() const { return buses.size(); }
  int slack_index() const;
  int bess_index() const;
  int pv_index() const;
  int load_index() const;
  /// Throws InvalidParameter unless the network is connected, has exactly one
  /// slack-capable bus and only nonzero impedances.
  void validate() const;
  Eigen::MatrixXcd admittance() const;

  /// Five-bus islanded feeder: 1 BESS (grid-forming), 2 junction, 3 PV farm,
  /// 4 junction, 5 aggregated load. Lines 1-2, 2-3, 2-4, 4-5.
  static Network five_bus();
};

std::string to_string(BusKind kind);
BusKind bus_kind_from_string(const std::string& s);

/// Complex current entering line `line` at its `from` end (or `to` end).
Complex line_current(const Line& line, const Eigen::VectorXcd& v, bool at_from);

struct BusState {
  double v_mag = 1.0;
  double v_ang = 0.0;
};

Eigen::VectorXcd to_phasors(const std::vector<BusState>& states);

}  // namespace sfdia::grid

namespace sfdia::grid {

/// Partial derivatives of complex bus injections S = diag(V) conj(Y V) with
/// respect to voltage angles and magnitudes (n x n each).
struct PowerDerivatives {
  Eigen::MatrixXcd ds_dang;
  Eigen::MatrixXcd ds_dmag;
};
PowerDerivatives bus_power_derivatives(const Eigen::MatrixXcd& ybus, const Eigen::VectorXcd& v);

}  // namespace sfdia::grid
