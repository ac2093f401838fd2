#pragma once

namespace sfdia::attack {

/// Reward coefficients. SoC errors enter in percentage points.
struct RewardParams {
  double k_u1 = 1.0;     // sign of the desired SoC error
  double k_u2 = 50.0;
  double k_u3 = 2500.0;
  double k_p = -500.0;
  double k_t1 = 0.2;
  double k_t2 = 2000.0;
  double k_t3 = 100.0;
  double hit_window = 1.0;  // percentage points for the k_t3 bonus

  void validate() const;
};

/// Per-step term (dphi / k_u2) * k_u1, plus the k_u3 terminal bonus at t_e and
/// k_p when the detector fired.
double reward_unconstrained(double dphi_pct, int t, int t_e, int f_bdd, const RewardParams& p);

/// min{2 - dphi/target, dphi/target} * k_t1.
double target_shaping(double dphi_pct, double target_pct, const RewardParams& p);

/// Shaping term every step; at t_d and at t_e add shaping * k_t2 and k_t3 when
/// |dphi - target| is within the hit window; k_p when the detector fired.
double reward_constrained(double dphi_pct, double target_pct, int t, int t_d, int t_e, int f_bdd,
                          const RewardParams& p);

}  // namespace sfdia::attack
