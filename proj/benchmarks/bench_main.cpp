#include <random>

#include <benchmark/benchmark.h>

#include "sfdia/attack_env.hpp"
#include "sfdia/bdd.hpp"
#include "sfdia/ekf.hpp"
#include "sfdia/plant.hpp"
#include "sfdia/power_flow.hpp"
#include "sfdia/sac.hpp"
#include "sfdia/wls.hpp"

using namespace sfdia;

namespace {

plant::PlantSample one_sample(const plant::PlantConfig& cfg, long step) {
  plant::Profiles prof(cfg.profiles, 1, cfg.dt, 3);
  plant::Plant p(cfg, prof, 3);
  p.reset(cfg.soc0, step);
  return p.step();
}

}  // namespace

static void BM_PowerFlow(benchmark::State& state) {
  const auto net = grid::Network::five_bus();
  std::vector<grid::Complex> s(net.size(), 0.0);
  s[net.pv_index()] = {0.6, 0.0};
  s[net.load_index()] = {-0.2, -0.066};
  for (auto _ : state) benchmark::DoNotOptimize(grid::solve_power_flow(net, s));
}
BENCHMARK(BM_PowerFlow);

static void BM_WlsEstimate(benchmark::State& state) {
  plant::PlantConfig cfg;
  const auto z = one_sample(cfg, 720).z.se_vector();
  const auto w = grid::channel_weights(cfg.plan, cfg.noise);
  for (auto _ : state) benchmark::DoNotOptimize(estimation::wls_estimate(z, cfg.net, cfg.plan, cfg.vsi, w));
}
BENCHMARK(BM_WlsEstimate);

static void BM_Detect(benchmark::State& state) {
  plant::PlantConfig cfg;
  const auto sample = one_sample(cfg, 720);
  const auto det = attack::make_detector(cfg);
  bdd::Thresholds th;
  th.tau_se = 1e9;
  th.tau_soc = 1.0;
  th.bounds = bdd::ChannelBounds::defaults(cfg.plan, cfg.pack);
  const auto cc = estimation::ekf_init(sample.z.bess.soc, cfg.pack, cfg.ekf);
  for (auto _ : state) benchmark::DoNotOptimize(bdd::detect(sample.z, det, th, cc));
}
BENCHMARK(BM_Detect);

static void BM_EkfStep(benchmark::State& state) {
  plant::PlantConfig cfg;
  auto s = estimation::ekf_init(0.5, cfg.pack, cfg.ekf);
  for (auto _ : state) {
    s = estimation::ekf_step(s, 1800.0, 100.0, 60.0, cfg.pack).state;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_EkfStep);

static void BM_PlantStep(benchmark::State& state) {
  plant::PlantConfig cfg;
  plant::Profiles prof(cfg.profiles, 1, cfg.dt, 3);
  plant::Plant p(cfg, prof, 3);
  p.reset(cfg.soc0, 0);
  long k = 0;
  for (auto _ : state) {
    if (++k == 1440) {
      p.reset(cfg.soc0, 0);
      k = 0;
    }
    benchmark::DoNotOptimize(p.step());
  }
}
BENCHMARK(BM_PlantStep);

static void BM_MlpForward(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  std::mt19937_64 rng(1);
  const auto net = rl::Mlp<float>::init({44, h, h, h, 4}, rng);
  const rl::Mat<float> x = rl::Mat<float>::Random(44, batch);
  rl::MlpCache<float> cache;
  for (auto _ : state) benchmark::DoNotOptimize(rl::forward(net, x, &cache));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward)->Args({64, 1})->Args({64, 256})->Args({256, 1})->Args({256, 256});

static void BM_MlpBackward(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const auto net = rl::Mlp<float>::init({44, h, h, h, 4}, rng);
  const rl::Mat<float> x = rl::Mat<float>::Random(44, 256);
  rl::MlpCache<float> cache;
  const rl::Mat<float> y = rl::forward(net, x, &cache);
  const rl::Mat<float> dy = rl::Mat<float>::Ones(y.rows(), y.cols());
  auto grad = rl::Mlp<float>::zeros(net.dims);
  for (auto _ : state) {
    grad.set_zero();
    rl::backward<float>(net, cache, dy, &grad, nullptr);
    benchmark::DoNotOptimize(grad);
  }
}
BENCHMARK(BM_MlpBackward)->Arg(64)->Arg(256);

static void BM_SacGradientStep(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  const int n = 44, A = 2, B = 256;
  std::mt19937_64 rng(2);
  auto nets = rl::SacNets<float>::create(n, A, Eigen::Vector2f(2.0f, 5.0f), {h, h, h}, rng);
  rl::Batch<float> b;
  b.s = rl::Mat<float>::Random(n, B);
  b.a = rl::Mat<float>::Random(A, B);
  b.r = rl::Vec<float>::Random(B);
  b.s2 = rl::Mat<float>::Random(n, B);
  b.done = rl::Vec<float>::Zero(B);
  rl::SacHyper hyper;
  std::normal_distribution<float> nd;
  rl::Mat<float> eps(A, B);
  auto g1 = rl::Mlp<float>::zeros(nets.q1.dims), g2 = g1, ga = rl::Mlp<float>::zeros(nets.actor.dims);
  for (auto _ : state) {
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = nd(rng);
    benchmark::DoNotOptimize(rl::q_loss(b, nets, eps, hyper, &g1, &g2));
    benchmark::DoNotOptimize(rl::policy_loss(b, nets, eps, hyper, &ga));
  }
}
BENCHMARK(BM_SacGradientStep)->Arg(64)->Arg(256);
BENCHMARK_MAIN();
