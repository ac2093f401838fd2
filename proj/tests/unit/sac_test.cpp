#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sfdia/error.hpp"
#include "sfdia/sac.hpp"

using namespace sfdia::rl;

namespace {

Batch<double> random_batch(int n, int A, int B, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Batch<double> b;
  b.s = Mat<double>::NullaryExpr(n, B, [&] { return u(rng); });
  b.s2 = Mat<double>::NullaryExpr(n, B, [&] { return u(rng); });
  b.a = Mat<double>::NullaryExpr(A, B, [&] { return u(rng); });
  b.r = Vec<double>::NullaryExpr(B, [&] { return u(rng); });
  b.done = Vec<double>::Zero(B);
  b.done(B / 2) = 1.0;
  return b;
}

Mat<double> normal(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  return Mat<double>::NullaryExpr(r, c, [&] { return nd(rng); });
}

// Largest relative error over random parameter probes.
template <class F>
double probe(Mlp<double>& net, const Mlp<double>& grad, F loss, int probes, std::mt19937_64& rng) {
  const auto p = net.flatten();
  const auto g = grad.flatten();
  std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    const std::size_t i = pick(rng);
    const double h = 1e-6;
    auto q = p;
    q[i] += h;
    net.unflatten(q);
    const double fp = loss();
    q[i] -= 2 * h;
    net.unflatten(q);
    const double fm = loss();
    net.unflatten(p);
    const double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max(1e-6, std::abs(fd) + std::abs(g[i])));
  }
  return worst;
}

}  // namespace

TEST(Mlp, FlattenRoundTrip) {
  std::mt19937_64 rng(1);
  auto net = Mlp<double>::init({3, 5, 2}, rng);
  EXPECT_EQ(net.param_count(), 3u * 5 + 5 + 5 * 2 + 2);
  const auto flat = net.flatten();
  auto other = Mlp<double>::zeros(net.dims);
  other.unflatten(flat);
  EXPECT_EQ(other.flatten(), flat);
}

TEST(Mlp, InputGradient) {
  std::mt19937_64 rng(2);
  const auto net = Mlp<double>::init({4, 6, 6, 3}, rng);
  const Mat<double> x = normal(4, 2, rng);
  MlpCache<double> cache;
  const Mat<double> y = forward(net, x, &cache);
  const Mat<double> dy = Mat<double>::Ones(y.rows(), y.cols());
  Mat<double> dx;
  backward<double>(net, cache, dy, nullptr, &dx);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Mat<double> xp = x, xm = x;
    xp.data()[i] += 1e-6;
    xm.data()[i] -= 1e-6;
    const double fd = (forward(net, xp).sum() - forward(net, xm).sum()) / 2e-6;
    EXPECT_NEAR(dx.data()[i], fd, 1e-6);
  }
}

TEST(Policy, DeterministicIsTanhMean) {
  std::mt19937_64 rng(3);
  const auto actor = Mlp<float>::init({5, 8, 4}, rng);
  const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(5, -1, 1);
  const Eigen::VectorXd scale = Eigen::Vector2d(2.0, 5.0);
  const auto out = policy_sample(actor, s, scale, rng, true);
  const Eigen::VectorXf mu = forward(actor, Mat<float>(s.cast<float>())).col(0).head(2);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(out.action(j), std::tanh(mu(j)) * scale(j), 1e-6);
}

TEST(Policy, GaussianDensityAtMean) {
  EXPECT_NEAR(squashed_log_prob(0.0, 0.0, 0.0, 1.0), -0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(squashed_log_prob(0.0, 0.0, 0.0, 1.0), -0.9189, 1e-4);
}

TEST(Policy, LogProbMatchesBatchEvaluation) {
  std::mt19937_64 rng(4);
  const auto actor = Mlp<double>::init({3, 8, 4}, rng);
  const Mat<double> s = normal(3, 6, rng), eps = normal(2, 6, rng);
  const Vec<double> scale = Eigen::Vector2d(2.0, 5.0);
  const auto pb = policy_eval(actor, s, eps, scale);
  for (int b = 0; b < 6; ++b) {
    double lp = 0.0;
    for (int j = 0; j < 2; ++j) lp += squashed_log_prob(pb.u(j, b), pb.mu(j, b), pb.log_sigma(j, b), scale(j));
    EXPECT_NEAR(pb.log_prob(b), lp, 1e-9);
  }
}

TEST(Policy, SamplesStayInsideBounds) {
  std::mt19937_64 rng(5);
  auto actor = Mlp<float>::init({2, 4, 4}, rng);
  actor.b.back()(2) = actor.b.back()(3) = 2.0f;  // wide sigma
  const Eigen::VectorXd scale = Eigen::Vector2d(2.0, 5.0);
  const Eigen::VectorXd s = Eigen::Vector2d(0.3, -0.7);
  for (int k = 0; k < 100000; ++k) {
    const auto a = policy_sample(actor, s, scale, rng, false).action;
    ASSERT_LE(std::abs(a(0)), 2.0);
    ASSERT_LE(std::abs(a(1)), 5.0);
  }
}

class SacLoss : public ::testing::Test {
 protected:
  void SetUp() override {
    nets = SacNets<double>::create(3, 2, Eigen::Vector2d(2.0, 5.0), {4, 4, 4}, rng);
    for (auto& w : nets.q1_target.w) w += 0.1 * normal(static_cast<int>(w.rows()), static_cast<int>(w.cols()), rng);
    batch = random_batch(3, 2, 5, rng);
    eps = normal(2, 5, rng);
  }
  std::mt19937_64 rng{6};
  SacNets<double> nets;
  Batch<double> batch;
  Mat<double> eps;
  SacHyper hyper;
};

TEST_F(SacLoss, TerminalTargetIsReward) {
  const auto y = bellman_targets(batch, nets, eps, hyper);
  EXPECT_DOUBLE_EQ(y(2), batch.r(2));
}

TEST_F(SacLoss, TargetUsesSmallerCritic) {
  for (auto* q : {&nets.q1_target, &nets.q2_target})
    for (auto& w : q->w) w.setZero();
  for (auto& b : nets.q1_target.b) b.setZero();
  for (auto& b : nets.q2_target.b) b.setZero();
  nets.q1_target.b.back()(0) = 2.0;
  nets.q2_target.b.back()(0) = 3.0;
  hyper.alpha = 0.0;
  const auto y = bellman_targets(batch, nets, eps, hyper);
  for (int b = 0; b < 5; ++b)
    if (batch.done(b) == 0.0) EXPECT_NEAR(y(b), batch.r(b) + hyper.gamma * 2.0, 1e-12);
}

TEST_F(SacLoss, CriticGradientMatchesFiniteDifferences) {
  auto g1 = Mlp<double>::zeros(nets.q1.dims), g2 = g1;
  q_loss(batch, nets, eps, hyper, &g1, &g2);
  const auto f = [&] { return q_loss<double>(batch, nets, eps, hyper, nullptr, nullptr); };
  EXPECT_LT(probe(nets.q1, g1, f, 100, rng), 1e-4);
  EXPECT_LT(probe(nets.q2, g2, f, 100, rng), 1e-4);
}

TEST_F(SacLoss, ActorGradientMatchesFiniteDifferences) {
  auto ga = Mlp<double>::zeros(nets.actor.dims);
  policy_loss(batch, nets, eps, hyper, &ga);
  const auto f = [&] { return policy_loss<double>(batch, nets, eps, hyper, nullptr); };
  EXPECT_LT(probe(nets.actor, ga, f, 100, rng), 1e-4);
}

TEST_F(SacLoss, ConstantCriticWithoutEntropyGivesNoGradient) {
  for (auto* q : {&nets.q1, &nets.q2}) {
    for (auto& w : q->w) w.setZero();
    for (auto& b : q->b) b.setConstant(1.5);
  }
  hyper.alpha = 0.0;
  auto ga = Mlp<double>::zeros(nets.actor.dims);
  policy_loss(batch, nets, eps, hyper, &ga);
  for (double g : ga.flatten()) EXPECT_EQ(g, 0.0);
}

TEST_F(SacLoss, EntropyPressureGrowsWithAlpha) {
  double prev = -1e300;
  for (double a : {0.0, 0.1, 0.5, 1.0}) {
    hyper.alpha = a;
    const double l = policy_loss<double>(batch, nets, eps, hyper, nullptr);
    hyper.alpha = 0.0;
    const double base = policy_loss<double>(batch, nets, eps, hyper, nullptr);
    const auto pb = policy_eval(nets.actor, batch.s, eps, nets.scale);
    EXPECT_NEAR(l - base, a * pb.log_prob.mean(), 1e-10);
    (void)prev;
  }
}

TEST(SoftUpdate, Cases) {
  std::mt19937_64 rng(7);
  const auto online = Mlp<double>::init({2, 3, 1}, rng);
  auto same = online;
  soft_update(same, online, 0.005);
  EXPECT_EQ(same.flatten(), online.flatten());
  auto target = Mlp<double>::init({2, 3, 1}, rng);
  const auto before = target.flatten();
  auto copy = target;
  soft_update(copy, online, 1.0);
  EXPECT_EQ(copy.flatten(), online.flatten());
  soft_update(target, online, 0.005);
  const auto after = target.flatten(), on = online.flatten();
  for (std::size_t i = 0; i < after.size(); ++i) EXPECT_NEAR(after[i], 0.005 * on[i] + 0.995 * before[i], 1e-15);
}

TEST(Replay, RingAndSampling) {
  ReplayBuffer buf(1, 1, 4);
  for (int k = 0; k < 6; ++k)
    buf.add(Eigen::VectorXd::Constant(1, k), Eigen::VectorXd::Constant(1, -k), k, Eigen::VectorXd::Constant(1, k + 1),
            k == 5);
  EXPECT_EQ(buf.size(), 4u);
  EXPECT_EQ(buf.at(0).s(0, 0), 2.0f);
  EXPECT_EQ(buf.at(3).done(0), 1.0f);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    auto idx = buf.sample_indices(4, rng);
    std::sort(idx.begin(), idx.end());
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
  }
  EXPECT_THROW(buf.sample_indices(5, rng), sfdia::Error);
}

TEST(Hyper, Validation) {
  SacHyper h;
  EXPECT_NO_THROW(h.validate());
  h.gamma = 1.5;
  EXPECT_THROW(h.validate(), sfdia::Error);
}

namespace {

// One-dimensional tracking: the state is a target in [-1, 1] and the reward
// is -(a - s)^2.
class Tracking : public Environment {
 public:
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  Eigen::VectorXd action_scale() const override { return Eigen::VectorXd::Ones(1); }
  Eigen::VectorXd reset(std::mt19937_64& rng) override {
    rng_ = &rng;
    t_ = 0;
    return draw();
  }
  EnvStep step(const Eigen::VectorXd& a) override {
    const double r = -(a(0) - s_) * (a(0) - s_);
    ++t_;
    return {draw(), r, t_ == 10};
  }

 private:
  Eigen::VectorXd draw() {
    s_ = std::uniform_real_distribution<double>(-1.0, 1.0)(*rng_);
    return Eigen::VectorXd::Constant(1, s_);
  }
  std::mt19937_64* rng_ = nullptr;
  double s_ = 0.0;
  int t_ = 0;
};

SacHyper toy_hyper() {
  SacHyper h;
  h.hidden = {32, 32};
  h.batch = 64;
  h.alpha = 0.05;
  h.lr = 1e-3;
  h.gamma = 0.9;
  return h;
}

}  // namespace

TEST(Train, LearnsToyTracking) {
  Tracking env;
  std::mt19937_64 rng(9);
  double random_return = 0.0;
  for (int e = 0; e < 200; ++e) {
    env.reset(rng);
    for (int k = 0; k < 10; ++k)
      random_return += env.step(Eigen::VectorXd::Constant(1, std::uniform_real_distribution<double>(-1, 1)(rng))).reward;
  }
  random_return /= 200.0;
  TrainOptions o;
  o.episodes = 200;
  const auto res = train(env, toy_hyper(), o, rng);
  ASSERT_EQ(res.returns.size(), 200u);
  EXPECT_GT(res.sliding_mean.back(), random_return / 5.0) << "random " << random_return;
}

TEST(Train, ReproducibleRewardCurve) {
  TrainOptions o;
  o.episodes = 40;
  Tracking a, b;
  std::mt19937_64 ra(10), rb(10);
  const auto x = train(a, toy_hyper(), o, ra);
  const auto y = train(b, toy_hyper(), o, rb);
  EXPECT_EQ(x.returns, y.returns);
  EXPECT_EQ(x.nets.actor.flatten(), y.nets.actor.flatten());
}

TEST(Train, SlidingMean) {
  const auto m = sliding_mean({1, 2, 3, 4, 5}, 2);
  EXPECT_EQ(m, (std::vector<double>{1, 1.5, 2.5, 3.5, 4.5}));
}
