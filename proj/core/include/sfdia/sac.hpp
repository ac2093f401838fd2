// Soft actor-critic over small dense networks with hand-written backprop.
// Networks are column-batched: a batch of B inputs is an (in x B) matrix.
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfdia::rl {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Fully connected network: ReLU on hidden layers, linear output.
template <class S>
struct Mlp {
  std::vector<int> dims;  // input, hidden..., output
  std::vector<Mat<S>> w;
  std::vector<Vec<S>> b;

  static Mlp zeros(const std::vector<int>& dims);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static Mlp init(const std::vector<int>& dims, std::mt19937_64& rng);

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int layers() const { return static_cast<int>(w.size()); }
  std::size_t param_count() const;
  bool same_shape(const Mlp& o) const { return dims == o.dims; }
  bool finite() const;
  void set_zero();
  /// Flat view in layer order, weights column-major then bias.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  template <class T>
  Mlp<T> cast() const {
    Mlp<T> out;
    out.dims = dims;
    for (const auto& m : w) out.w.push_back(m.template cast<T>());
    for (const auto& v : b) out.b.push_back(v.template cast<T>());
    return out;
  }
};

using MlpParams = Mlp<float>;

/// Post-activation outputs of every layer, kept for the backward pass.
template <class S>
struct MlpCache {
  std::vector<Mat<S>> a;  // a[0] = input, a[L] = output
};

template <class S>
Mat<S> forward(const Mlp<S>& net, const Mat<S>& x, MlpCache<S>* cache = nullptr);

/// Accumulates dL/dparams into grad (same shape as net) and optionally
/// returns dL/dinput.
template <class S>
void backward(const Mlp<S>& net, const MlpCache<S>& cache, const Mat<S>& dy, Mlp<S>* grad, Mat<S>* dx);

/// target <- tau * online + (1 - tau) * target.
template <class S>
void soft_update(Mlp<S>& target, const Mlp<S>& online, S tau);

struct SacHyper {
  double lr = 3e-4;
  double gamma = 0.99;
  int batch = 256;
  double target_tau = 0.005;
  double alpha = 0.5;
  std::size_t buffer_capacity = 1000000;
  std::vector<int> hidden = {256, 256, 256};
  int gradient_steps = -1;  // per episode; -1 means one per environment step
  int warmup_episodes = 0;  // episodes with uniform random actions before the policy acts

  void validate() const;
};

/// Squashed Gaussian policy: the actor emits (mu, log sigma) per action
/// dimension, a = tanh(mu + sigma * eps) * scale.
constexpr double kLogSigmaMin = -20.0;
constexpr double kLogSigmaMax = 2.0;

template <class S>
struct PolicyBatch {
  Mat<S> action;    // scaled, (A x B)
  Mat<S> squashed;  // tanh(u), (A x B)
  Mat<S> u;         // pre-squash sample
  Mat<S> mu;
  Mat<S> log_sigma;  // after clamping
  Vec<S> log_prob;  // (B)
  MlpCache<S> cache;
};

/// eps is standard normal noise (A x B); pass a zero matrix for the mean action.
template <class S>
PolicyBatch<S> policy_eval(const Mlp<S>& actor, const Mat<S>& states, const Mat<S>& eps, const Vec<S>& scale);

struct PolicySample {
  Eigen::VectorXd action;
  double log_prob = 0.0;
};

/// Single-state sample. Deterministic returns tanh(mu) * scale.
PolicySample policy_sample(const MlpParams& actor, const Eigen::VectorXd& state, const Eigen::VectorXd& scale,
                           std::mt19937_64& rng, bool deterministic);

/// Log density of the squashed policy at a pre-squash point u.
double squashed_log_prob(double u, double mu, double log_sigma, double scale);

template <class S>
struct Batch {
  Mat<S> s;   // (n x B)
  Mat<S> a;   // scaled actions (A x B)
  Vec<S> r;
  Mat<S> s2;
  Vec<S> done;
};

template <class S>
struct SacNets {
  Mlp<S> actor, q1, q2, q1_target, q2_target;
  Vec<S> scale;  // action scale

  static SacNets create(int state_dim, int action_dim, const Vec<S>& scale, const std::vector<int>& hidden,
                        std::mt19937_64& rng);
  bool finite() const;
};

/// Critic input: state stacked over the action divided by its scale.
template <class S>
Mat<S> critic_input(const Mat<S>& s, const Mat<S>& a, const Vec<S>& scale);

/// Soft Bellman targets y = r + gamma * (1 - done) * (min target Q - alpha log pi)
/// with a' drawn from the policy using eps_next.
template <class S>
Vec<S> bellman_targets(const Batch<S>& batch, const SacNets<S>& nets, const Mat<S>& eps_next, const SacHyper& h);

/// 0.5 mean (Q1 - y)^2 + 0.5 mean (Q2 - y)^2. Gradients accumulate into g1, g2
/// when non-null.
template <class S>
S q_loss(const Batch<S>& batch, const SacNets<S>& nets, const Mat<S>& eps_next, const SacHyper& h, Mlp<S>* g1,
         Mlp<S>* g2);

/// mean(alpha log pi(a|s) - min(Q1, Q2)(s, a)) with a reparameterised by eps.
/// Gradient w.r.t. the actor accumulates into ga when non-null.
template <class S>
S policy_loss(const Batch<S>& batch, const SacNets<S>& nets, const Mat<S>& eps, const SacHyper& h, Mlp<S>* ga);

template <class S>
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp<S>& like, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Mlp<S>& net, const Mlp<S>& grad);
  long steps() const { return t_; }

 private:
  Mlp<S> m_, v_;
  double lr_ = 3e-4, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

/// Ring buffer of transitions stored as float.
class ReplayBuffer {
 public:
  ReplayBuffer(int state_dim, int action_dim, std::size_t capacity);
  void add(const Eigen::VectorXd& s, const Eigen::VectorXd& a, double r, const Eigen::VectorXd& s2, bool done);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Uniform without replacement within the batch.
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;
  Batch<float> gather(const std::vector<std::size_t>& idx) const;
  /// Transition i counted from the oldest retained one.
  Batch<float> at(std::size_t i) const { return gather({physical(i)}); }

 private:
  std::size_t physical(std::size_t logical) const;
  int n_, m_;
  std::size_t capacity_, size_ = 0, head_ = 0;
  std::vector<float> s_, a_, r_, s2_, d_;
};

/// Minimal episodic environment contract used by the trainer.
struct EnvStep {
  Eigen::VectorXd state;
  double reward = 0.0;
  bool done = false;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual Eigen::VectorXd action_scale() const = 0;
  virtual Eigen::VectorXd reset(std::mt19937_64& rng) = 0;
  virtual EnvStep step(const Eigen::VectorXd& action) = 0;
};

struct EpisodeLog {
  int episode = 0;
  double episode_return = 0.0;
  double sliding_mean = 0.0;
  int steps = 0;
  double q_loss = 0.0;
  double policy_loss = 0.0;
};

struct TrainOptions {
  int episodes = 1000;
  int sliding_window = 50;
  std::function<void(const EpisodeLog&)> on_episode;
  /// Return false to stop early (e.g. after a convergence check).
  std::function<bool(const EpisodeLog&, const SacNets<float>&)> keep_going;
  /// Called with the current networks when a loss turns non-finite, before
  /// the trainer throws.
  std::function<void(const SacNets<float>&)> on_divergence;
};

struct TrainResult {
  SacNets<float> nets;
  std::vector<double> returns;
  std::vector<double> sliding_mean;
  std::vector<EpisodeLog> log;
};

TrainResult train(Environment& env, const SacHyper& hyper, const TrainOptions& opts, std::mt19937_64& rng);

/// Trailing mean over up to `window` values ending at each index.
std::vector<double> sliding_mean(const std::vector<double>& x, int window);

}  // namespace sfdia::rl
