#include "sfdia/reward.hpp"

#include <algorithm>
#include <cmath>

#include "sfdia/error.hpp"

namespace sfdia::attack {

void RewardParams::validate() const {
  require(k_u2 != 0.0, ErrorCode::Config, "k_u2 must be nonzero");
  require(hit_window >= 0.0, ErrorCode::Config, "hit window must be non-negative");
}

double reward_unconstrained(double dphi_pct, int t, int t_e, int f_bdd, const RewardParams& p) {
  const double r_u1 = dphi_pct / p.k_u2 * p.k_u1;
  double r = r_u1;
  if (t == t_e) r += r_u1 * p.k_u3;
  return r + p.k_p * f_bdd;
}

double target_shaping(double dphi_pct, double target_pct, const RewardParams& p) {
  require(target_pct != 0.0, ErrorCode::InvalidParameter, "constrained attack needs a nonzero target");
  const double ratio = dphi_pct / target_pct;
  return std::min(2.0 - ratio, ratio) * p.k_t1;
}

double reward_constrained(double dphi_pct, double target_pct, int t, int t_d, int t_e, int f_bdd,
                          const RewardParams& p) {
  const double r_tar1 = target_shaping(dphi_pct, target_pct, p);
  double r = r_tar1;
  if (t == t_d || t == t_e) {
    const double r_tar3 = std::abs(dphi_pct - target_pct) <= p.hit_window ? p.k_t3 : 0.0;
    r += r_tar1 * p.k_t2 + r_tar3;
  }
  return r + p.k_p * f_bdd;
}

}  // namespace sfdia::attack
