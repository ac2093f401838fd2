#include "sfdia/measurement.hpp"

#include <cmath>
#include <numbers>

#include "sfdia/error.hpp"

namespace sfdia::grid {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSqrt3 = std::numbers::sqrt3;

double ac_base_amps(const Network& net, const VsiParams& vsi) {
  return net.base_mva * 1e6 / (kSqrt3 * vsi.ac_base_volts);
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

void VsiParams::validate() const {
  require(r_ac > 0.0, ErrorCode::InvalidParameter, "VSI r_ac must be positive");
  require(r_dc > 0.0, ErrorCode::InvalidParameter, "VSI r_dc must be positive");
  require(ac_base_volts > 0.0, ErrorCode::InvalidParameter, "VSI AC base voltage must be positive");
}

VsiOutput vsi_couple(double mod_index, double v_dc, double i_dc_into_battery, const VsiParams& params, double i_ri) {
  require(v_dc > 0.0, ErrorCode::InvalidParameter, "v_dc must be positive");
  if (!(mod_index >= 0.0 && mod_index <= 1.0))
    fail(ErrorCode::Range, "modulation index " + std::to_string(mod_index) + " outside [0, 1]");
  VsiOutput out;
  out.v_r = mod_index * v_dc / kSqrt2;
  out.p_dc = v_dc * i_dc_into_battery;
  out.p_loss = i_ri * i_ri * params.r_ac + v_dc * v_dc / params.r_dc;
  out.p_ri = -out.p_dc - out.p_loss;
  return out;
}

std::string Channel::label(const Network& net) const {
  auto bus = [&](int b) { return std::to_string(net.buses.at(b).id); };
  auto line = [&](int l) {
    const auto& ln = net.lines.at(l);
    return at_from ? bus(ln.from) + "-" + bus(ln.to) : bus(ln.to) + "-" + bus(ln.from);
  };
  switch (kind) {
    case ChannelKind::VMag: return "V_" + bus(index);
    case ChannelKind::VAng: return "theta_" + bus(index);
    case ChannelKind::LineIReal: return "Ire_" + line(index);
    case ChannelKind::LineIImag: return "Iim_" + line(index);
    case ChannelKind::PInj: return "P_" + bus(index);
    case ChannelKind::QInj: return "Q_" + bus(index);
    case ChannelKind::PFlow: return "P_" + line(index);
    case ChannelKind::QFlow: return "Q_" + line(index);
    case ChannelKind::ConverterVoltage: return "V_r";
  }
  return "?";
}

std::vector<std::string> MeteringPlan::labels(const Network& net) const {
  std::vector<std::string> out;
  for (const auto& c : scada) out.push_back(c.label(net));
  out.insert(out.end(), {"V_dc", "I_dc", "m"});
  return out;
}

MeteringPlan MeteringPlan::default_plan(const Network& net) {
  MeteringPlan plan;
  const int pmu_bus = net.size() > 1 ? 1 : 0;
  plan.scada.push_back({ChannelKind::VMag, pmu_bus, true, NoiseClass::Phasor, 1.0});
  plan.scada.push_back({ChannelKind::VAng, pmu_bus, true, NoiseClass::Phasor, 1.0});
  // Current phasor of the first line incident to the PMU bus, metered there.
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    const auto& ln = net.lines[l];
    if (ln.from == pmu_bus || ln.to == pmu_bus) {
      const bool at_from = ln.from == pmu_bus;
      plan.scada.push_back({ChannelKind::LineIReal, static_cast<int>(l), at_from, NoiseClass::Phasor, 1.0});
      plan.scada.push_back({ChannelKind::LineIImag, static_cast<int>(l), at_from, NoiseClass::Phasor, 1.0});
      break;
    }
  }
  for (int b = 0; b < static_cast<int>(net.size()); ++b) {
    plan.scada.push_back({ChannelKind::PInj, b, true, NoiseClass::Power, 1.0});
    plan.scada.push_back({ChannelKind::QInj, b, true, NoiseClass::Power, 1.0});
  }
  for (int l = 0; l < static_cast<int>(net.lines.size()); ++l) {
    for (bool end : {true, false}) {
      plan.scada.push_back({ChannelKind::PFlow, l, end, NoiseClass::Power, 1.0});
      plan.scada.push_back({ChannelKind::QFlow, l, end, NoiseClass::Power, 1.0});
    }
  }
  return plan;
}

double NoiseSpec::relative(NoiseClass c) const {
  switch (c) {
    case NoiseClass::Magnitude: return sigma_mag;
    case NoiseClass::Phasor: return sigma_phasor;
    case NoiseClass::Power: return sigma_power;
  }
  return 0.0;
}

void NoiseSpec::validate() const {
  require(sigma_mag >= 0.0 && sigma_phasor >= 0.0 && sigma_power >= 0.0, ErrorCode::InvalidParameter,
          "noise standard deviations must be non-negative");
}

Eigen::VectorXd channel_sigmas(const MeteringPlan& plan, const NoiseSpec& noise) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(plan.size()));
  for (std::size_t i = 0; i < plan.scada.size(); ++i)
    s(static_cast<Eigen::Index>(i)) = noise.relative(plan.scada[i].noise) * plan.scada[i].full_scale;
  s(static_cast<Eigen::Index>(plan.vdc_slot())) = noise.sigma_mag * plan.vdc_full_scale;
  s(static_cast<Eigen::Index>(plan.idc_slot())) = noise.sigma_mag * plan.idc_full_scale;
  s(static_cast<Eigen::Index>(plan.mod_slot())) = noise.sigma_mag * plan.mod_full_scale;
  return s;
}

Eigen::VectorXd channel_weights(const MeteringPlan& plan, const NoiseSpec& noise) {
  const Eigen::VectorXd s = channel_sigmas(plan, noise);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    require(s(i) > 0.0, ErrorCode::InvalidParameter, "estimator weights need strictly positive sigmas");
  return s.array().square().inverse();
}

Eigen::VectorXd MeasurementSet::se_vector() const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(scada.size() + 3));
  for (std::size_t i = 0; i < scada.size(); ++i) z(static_cast<Eigen::Index>(i)) = scada[i];
  const auto n = static_cast<Eigen::Index>(scada.size());
  z(n) = bess.v_dc;
  z(n + 1) = bess.i_dc;
  z(n + 2) = bess.mod_index;
  return z;
}

bool MeasurementSet::finite() const {
  for (double v : scada)
    if (!std::isfinite(v)) return false;
  return std::isfinite(bess.v_dc) && std::isfinite(bess.i_dc) && std::isfinite(bess.mod_index) &&
         std::isfinite(bess.soc) && std::isfinite(timestamp);
}

StateLayout::StateLayout(const Network& net) : slack_(net.slack_index()) {
  require(slack_ >= 0, ErrorCode::InvalidParameter, "network has no slack bus");
  slot_.assign(net.size(), -1);
  for (int i = 0; i < static_cast<int>(net.size()); ++i) {
    if (i == slack_) continue;
    slot_[i] = static_cast<Eigen::Index>(nonslack_.size());
    nonslack_.push_back(i);
  }
}

Eigen::Index StateLayout::angle_slot(int bus) const { return slot_.at(bus); }

Eigen::Index StateLayout::mag_slot(int bus) const {
  const auto s = slot_.at(bus);
  return s < 0 ? -1 : s + static_cast<Eigen::Index>(nonslack_.size());
}

Eigen::VectorXd StateLayout::pack(const std::vector<BusState>& buses, double v_dc, double mod_index) const {
  Eigen::VectorXd x(size());
  for (int b : nonslack_) {
    x(angle_slot(b)) = buses.at(b).v_ang;
    x(mag_slot(b)) = buses.at(b).v_mag;
  }
  x(vdc_slot()) = v_dc;
  x(mod_slot()) = mod_index;
  return x;
}

Eigen::VectorXcd StateLayout::phasors(const Eigen::VectorXd& x, const VsiParams& vsi) const {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(slot_.size()));
  v(slack_) = Complex(x(mod_slot()) * x(vdc_slot()) / (kSqrt2 * vsi.ac_base_volts), 0.0);
  for (int b : nonslack_) v(b) = std::polar(x(mag_slot(b)), x(angle_slot(b)));
  return v;
}

namespace {

double channel_value(const Channel& c, const Eigen::VectorXcd& v, const Eigen::VectorXcd& ibus, const Network& net) {
  switch (c.kind) {
    case ChannelKind::VMag: return std::abs(v(c.index));
    case ChannelKind::VAng: return std::arg(v(c.index));
    case ChannelKind::LineIReal: return line_current(net.lines.at(c.index), v, c.at_from).real();
    case ChannelKind::LineIImag: return line_current(net.lines.at(c.index), v, c.at_from).imag();
    case ChannelKind::PInj: return (v(c.index) * std::conj(ibus(c.index))).real();
    case ChannelKind::QInj: return (v(c.index) * std::conj(ibus(c.index))).imag();
    case ChannelKind::PFlow:
    case ChannelKind::QFlow: {
      const auto& ln = net.lines.at(c.index);
      const Complex s = v(c.at_from ? ln.from : ln.to) * std::conj(line_current(ln, v, c.at_from));
      return c.kind == ChannelKind::PFlow ? s.real() : s.imag();
    }
    case ChannelKind::ConverterVoltage: break;
  }
  fail(ErrorCode::Contract, "converter voltage channel needs the augmented state; use h_eval");
}

}  // namespace

std::vector<double> scada_values(const Eigen::VectorXcd& v, const MeteringPlan& plan, const Network& net) {
  const Eigen::VectorXcd ibus = net.admittance() * v;
  std::vector<double> out;
  out.reserve(plan.scada.size());
  for (const auto& c : plan.scada) out.push_back(channel_value(c, v, ibus, net));
  return out;
}

double predicted_idc(const Eigen::VectorXcd& v, double v_dc, const Network& net, const VsiParams& vsi) {
  const int b = net.slack_index();
  const Complex ib = (net.admittance().row(b) * v)(0);
  const double p_ac = (v(b) * std::conj(ib)).real() * net.base_mva * 1e6;
  const double i_ri = std::abs(ib) * ac_base_amps(net, vsi);
  const double p_loss = i_ri * i_ri * vsi.r_ac + v_dc * v_dc / vsi.r_dc;
  return (p_ac + p_loss) / v_dc;
}

Eigen::VectorXd h_eval(const Eigen::VectorXd& x, const Network& net, const MeteringPlan& plan, const VsiParams& vsi) {
  const StateLayout layout(net);
  if (x.size() != layout.size())
    fail(ErrorCode::Contract, "augmented state has dimension " + std::to_string(x.size()) + ", expected " +
                                  std::to_string(layout.size()));
  const Eigen::VectorXcd v = layout.phasors(x, vsi);
  const Eigen::VectorXcd ibus = net.admittance() * v;
  Eigen::VectorXd h(static_cast<Eigen::Index>(plan.size()));
  for (std::size_t i = 0; i < plan.scada.size(); ++i) {
    const auto& c = plan.scada[i];
    h(static_cast<Eigen::Index>(i)) = c.kind == ChannelKind::ConverterVoltage
                                          ? x(layout.mod_slot()) * x(layout.vdc_slot()) / kSqrt2
                                          : channel_value(c, v, ibus, net);
  }
  const double v_dc = x(layout.vdc_slot());
  h(static_cast<Eigen::Index>(plan.vdc_slot())) = v_dc;
  h(static_cast<Eigen::Index>(plan.idc_slot())) = predicted_idc(v, v_dc, net, vsi);
  h(static_cast<Eigen::Index>(plan.mod_slot())) = x(layout.mod_slot());
  return h;
}

Eigen::MatrixXd h_jacobian(const Eigen::VectorXd& x, const Network& net, const MeteringPlan& plan,
                           const VsiParams& vsi) {
  const StateLayout layout(net);
  require(x.size() == layout.size(), ErrorCode::Contract, "augmented state dimension mismatch");
  const Eigen::Index nx = layout.size();
  const Eigen::VectorXcd v = layout.phasors(x, vsi);
  const Eigen::MatrixXcd ybus = net.admittance();
  const Eigen::VectorXcd ibus = ybus * v;
  const Complex j(0.0, 1.0);

  // dV(bus, state): sensitivity of each complex bus voltage to each state.
  Eigen::MatrixXcd dv = Eigen::MatrixXcd::Zero(v.size(), nx);
  for (int b : layout.nonslack()) {
    dv(b, layout.angle_slot(b)) = j * v(b);
    dv(b, layout.mag_slot(b)) = v(b) / std::abs(v(b));
  }
  const double c = 1.0 / (kSqrt2 * vsi.ac_base_volts);
  const double v_dc = x(layout.vdc_slot());
  const double m = x(layout.mod_slot());
  dv(layout.slack(), layout.vdc_slot()) = Complex(c * m, 0.0);
  dv(layout.slack(), layout.mod_slot()) = Complex(c * v_dc, 0.0);

  const Eigen::MatrixXcd di = ybus * dv;
  auto ds_inj = [&](int b) -> Eigen::RowVectorXcd {
    return std::conj(ibus(b)) * dv.row(b) + v(b) * di.row(b).conjugate();
  };
  auto di_line = [&](const Line& ln, bool at_from) -> Eigen::RowVectorXcd {
    const Complex ys = 1.0 / ln.z;
    const Complex ysh(0.0, ln.shunt_b / 2.0);
    const int near = at_from ? ln.from : ln.to;
    const int far = at_from ? ln.to : ln.from;
    return (ys + ysh) * dv.row(near) - ys * dv.row(far);
  };

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(plan.size()), nx);
  for (std::size_t i = 0; i < plan.scada.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto& ch = plan.scada[i];
    switch (ch.kind) {
      case ChannelKind::VMag: {
        const Complex vb = v(ch.index);
        jac.row(r) = (std::conj(vb) * dv.row(ch.index)).real() / std::abs(vb);
        break;
      }
      case ChannelKind::VAng: {
        const Complex vb = v(ch.index);
        jac.row(r) = (std::conj(vb) * dv.row(ch.index)).imag() / std::norm(vb);
        break;
      }
      case ChannelKind::LineIReal: jac.row(r) = di_line(net.lines.at(ch.index), ch.at_from).real(); break;
      case ChannelKind::LineIImag: jac.row(r) = di_line(net.lines.at(ch.index), ch.at_from).imag(); break;
      case ChannelKind::PInj: jac.row(r) = ds_inj(ch.index).real(); break;
      case ChannelKind::QInj: jac.row(r) = ds_inj(ch.index).imag(); break;
      case ChannelKind::PFlow:
      case ChannelKind::QFlow: {
        const auto& ln = net.lines.at(ch.index);
        const int near = ch.at_from ? ln.from : ln.to;
        const Complex il = line_current(ln, v, ch.at_from);
        const Eigen::RowVectorXcd ds = std::conj(il) * dv.row(near) + v(near) * di_line(ln, ch.at_from).conjugate();
        jac.row(r) = ch.kind == ChannelKind::PFlow ? Eigen::RowVectorXd(ds.real()) : Eigen::RowVectorXd(ds.imag());
        break;
      }
      case ChannelKind::ConverterVoltage:
        jac(r, layout.vdc_slot()) = m / kSqrt2;
        jac(r, layout.mod_slot()) = v_dc / kSqrt2;
        break;
    }
  }

  // i_dc = (P_b Sb + (|I_b| Ib)^2 r_ac + v_dc^2 / r_dc) / v_dc
  const int b = layout.slack();
  const double sb = net.base_mva * 1e6;
  const double ib_amps = ac_base_amps(net, vsi);
  const Complex ib = ibus(b);
  const double p_ac = (v(b) * std::conj(ib)).real() * sb;
  const double i_ri = std::abs(ib) * ib_amps;
  const double numer = p_ac + i_ri * i_ri * vsi.r_ac + v_dc * v_dc / vsi.r_dc;
  const Eigen::RowVectorXd d_pac = ds_inj(b).real() * sb;
  const Eigen::RowVectorXd d_iri_sq = 2.0 * (std::conj(ib) * di.row(b)).real() * ib_amps * ib_amps;
  Eigen::RowVectorXd d_idc = (d_pac + d_iri_sq * vsi.r_ac) / v_dc;
  d_idc(layout.vdc_slot()) += 2.0 / vsi.r_dc - numer / (v_dc * v_dc);
  jac.row(static_cast<Eigen::Index>(plan.idc_slot())) = d_idc;
  jac(static_cast<Eigen::Index>(plan.vdc_slot()), layout.vdc_slot()) = 1.0;
  jac(static_cast<Eigen::Index>(plan.mod_slot()), layout.mod_slot()) = 1.0;
  return jac;
}

MeasurementSet synthesize_measurements(const std::vector<BusState>& buses, const BessTelemetry& bess_truth,
                                       const MeteringPlan& plan, const Network& net, const NoiseSpec& noise,
                                       std::mt19937_64& rng, double timestamp) {
  noise.validate();
  const Eigen::VectorXcd v = to_phasors(buses);
  const Eigen::VectorXcd ibus = net.admittance() * v;
  MeasurementSet z;
  z.timestamp = timestamp;
  z.provenance = Provenance::Clean;
  z.scada.reserve(plan.scada.size());
  const Eigen::VectorXd sigma = channel_sigmas(plan, noise);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < plan.scada.size(); ++i) {
    const auto& c = plan.scada[i];
    const double truth = c.kind == ChannelKind::ConverterVoltage
                             ? bess_truth.mod_index * bess_truth.v_dc / kSqrt2
                             : channel_value(c, v, ibus, net);
    double value = truth + sigma(static_cast<Eigen::Index>(i)) * gauss(rng);
    if (c.kind == ChannelKind::VAng) value = wrap_angle(value);
    z.scada.push_back(value);
  }
  z.bess.v_dc = bess_truth.v_dc + sigma(static_cast<Eigen::Index>(plan.vdc_slot())) * gauss(rng);
  z.bess.i_dc = bess_truth.i_dc + sigma(static_cast<Eigen::Index>(plan.idc_slot())) * gauss(rng);
  z.bess.mod_index = bess_truth.mod_index + sigma(static_cast<Eigen::Index>(plan.mod_slot())) * gauss(rng);
  z.bess.soc = bess_truth.soc;
  return z;
}

}  // namespace sfdia::grid
