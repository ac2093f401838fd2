// Current sign convention: positive current = discharge (battery delivers power).
#include "sfdia/ekf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sfdia/error.hpp"

namespace sfdia::estimation {

namespace {

bool is_spd(const Eigen::Matrix2d& m) {
  if (!m.allFinite() || std::abs(m(0, 1) - m(1, 0)) > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) return false;
  return Eigen::LLT<Eigen::Matrix2d>(m).info() == Eigen::Success;
}

[[noreturn]] void covariance_failure(const char* where, const EkfState& s) {
  std::ostringstream os;
  os << "EKF covariance lost positive definiteness (" << where << "): x = [" << s.x(0) << ", " << s.x(1)
     << "], P = [[" << s.covariance(0, 0) << ", " << s.covariance(0, 1) << "], [" << s.covariance(1, 0) << ", "
     << s.covariance(1, 1) << "]]";
  fail(ErrorCode::Numerical, os.str());
}

}  // namespace

void EkfNoise::validate() const {
  require(q_soc >= 0.0 && q_vrc >= 0.0, ErrorCode::InvalidParameter, "EKF process variances must be >= 0");
  require(r_meas > 0.0, ErrorCode::InvalidParameter, "EKF measurement variance must be positive");
  require(p0_soc > 0.0 && p0_vrc > 0.0, ErrorCode::InvalidParameter, "EKF initial covariance must be positive");
}

double EkfState::soc_hat() const { return std::clamp(x(0), 0.0, 1.0); }

EkfState ekf_init(double soc0, const battery::PackParams& pack, const Eigen::Matrix2d& q_process, double r_meas,
                  const Eigen::Matrix2d& p0) {
  (void)pack;
  require(soc0 >= 0.0 && soc0 <= 1.0, ErrorCode::InvalidParameter, "initial SoC must lie in [0, 1]");
  require(r_meas > 0.0, ErrorCode::InvalidParameter, "EKF measurement variance must be positive");
  require(is_spd(p0), ErrorCode::InvalidParameter, "EKF initial covariance must be SPD");
  require(q_process.allFinite() && q_process.isApprox(q_process.transpose()) &&
              Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(q_process).eigenvalues().minCoeff() >= 0.0,
          ErrorCode::InvalidParameter, "EKF process covariance must be symmetric positive semi-definite");
  EkfState s;
  s.x << soc0, 0.0;
  s.covariance = p0;
  s.q_process = q_process;
  s.r_meas = r_meas;
  return s;
}

EkfState ekf_init(double soc0, const battery::PackParams& pack, const EkfNoise& noise) {
  noise.validate();
  return ekf_init(soc0, pack, Eigen::Vector2d(noise.q_soc, noise.q_vrc).asDiagonal(), noise.r_meas,
                  Eigen::Vector2d(noise.p0_soc, noise.p0_vrc).asDiagonal());
}

EkfStepResult ekf_step(const EkfState& state, double v_dc, double i_dc, double dt, const battery::PackParams& pack) {
  require(dt > 0.0, ErrorCode::InvalidParameter, "dt must be positive");
  const double a = std::exp(-dt / pack.time_constant());

  EkfState next = state;
  next.x(0) = battery::coulomb_update(state.x(0), i_dc, dt, pack.capacity_ah);
  next.x(1) = a * state.x(1) + pack.ri * (1.0 - a) * i_dc;
  Eigen::Matrix2d f;
  f << 1.0, 0.0, 0.0, a;
  next.covariance = f * state.covariance * f.transpose() + state.q_process;

  const double predicted = pack.ocv(next.x(0)) - i_dc * pack.r0 - next.x(1);
  Eigen::RowVector2d h(std::max(pack.ocv.slope(next.x(0)), kOcvSlopeFloor), -1.0);
  const double s = (h * next.covariance * h.transpose())(0) + state.r_meas;
  const Eigen::Vector2d k = next.covariance * h.transpose() / s;
  next.x += k * (v_dc - predicted);
  const Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity() - k * h;
  next.covariance = ikh * next.covariance * ikh.transpose() + state.r_meas * k * k.transpose();
  next.covariance = 0.5 * (next.covariance + next.covariance.transpose());
  if (!next.x.allFinite() || !is_spd(next.covariance)) covariance_failure("update", next);
  return {next, next.soc_hat()};
}

}  // namespace sfdia::estimation
