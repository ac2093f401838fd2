#include "sfdia/sac.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sfdia/error.hpp"

namespace sfdia::rl {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

template <class S>
S softplus(S x) {
  return std::max(x, S(0)) + std::log1p(std::exp(-std::abs(x)));
}

// log(1 - tanh(u)^2), stable for large |u|.
template <class S>
S log1m_tanh2(S u) {
  return S(2) * (S(std::log(2.0)) - u - softplus(S(-2) * u));
}

template <class S>
void fill_normal(Mat<S>& m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<S>(nd(rng));
}

template <class S>
std::string dump_stats(const Mlp<S>& net) {
  std::ostringstream os;
  for (int l = 0; l < net.layers(); ++l) {
    os << " layer" << l << "[" << net.w[l].rows() << "x" << net.w[l].cols()
       << "] |w|max=" << net.w[l].cwiseAbs().maxCoeff() << " |b|max=" << net.b[l].cwiseAbs().maxCoeff();
  }
  return os.str();
}

}  // namespace

template <class S>
Mlp<S> Mlp<S>::zeros(const std::vector<int>& dims) {
  require(dims.size() >= 2, ErrorCode::InvalidParameter, "network needs at least input and output sizes");
  for (int d : dims) require(d > 0, ErrorCode::InvalidParameter, "layer sizes must be positive");
  Mlp net;
  net.dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    net.w.push_back(Mat<S>::Zero(dims[l + 1], dims[l]));
    net.b.push_back(Vec<S>::Zero(dims[l + 1]));
  }
  return net;
}

template <class S>
Mlp<S> Mlp<S>::init(const std::vector<int>& dims, std::mt19937_64& rng) {
  Mlp net = zeros(dims);
  for (int l = 0; l < net.layers(); ++l) {
    const double lim = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> u(-lim, lim);
    for (Eigen::Index j = 0; j < net.w[l].cols(); ++j)
      for (Eigen::Index i = 0; i < net.w[l].rows(); ++i) net.w[l](i, j) = static_cast<S>(u(rng));
    for (Eigen::Index i = 0; i < net.b[l].size(); ++i) net.b[l](i) = static_cast<S>(u(rng));
  }
  return net;
}

template <class S>
std::size_t Mlp<S>::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l < layers(); ++l) n += w[l].size() + b[l].size();
  return n;
}

template <class S>
bool Mlp<S>::finite() const {
  for (int l = 0; l < layers(); ++l)
    if (!w[l].allFinite() || !b[l].allFinite()) return false;
  return true;
}

template <class S>
void Mlp<S>::set_zero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

template <class S>
std::vector<double> Mlp<S>::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (int l = 0; l < layers(); ++l) {
    for (Eigen::Index k = 0; k < w[l].size(); ++k) out.push_back(static_cast<double>(w[l].data()[k]));
    for (Eigen::Index k = 0; k < b[l].size(); ++k) out.push_back(static_cast<double>(b[l].data()[k]));
  }
  return out;
}

template <class S>
void Mlp<S>::unflatten(const std::vector<double>& flat) {
  require(flat.size() == param_count(), ErrorCode::InvalidParameter, "flat parameter size mismatch");
  std::size_t p = 0;
  for (int l = 0; l < layers(); ++l) {
    for (Eigen::Index k = 0; k < w[l].size(); ++k) w[l].data()[k] = static_cast<S>(flat[p++]);
    for (Eigen::Index k = 0; k < b[l].size(); ++k) b[l].data()[k] = static_cast<S>(flat[p++]);
  }
}

template <class S>
Mat<S> forward(const Mlp<S>& net, const Mat<S>& x, MlpCache<S>* cache) {
  require(x.rows() == net.input_dim(), ErrorCode::InvalidParameter,
          "network input has " + std::to_string(x.rows()) + " rows, expected " + std::to_string(net.input_dim()));
  Mat<S> h = x;
  if (cache) {
    cache->a.clear();
    cache->a.push_back(x);
  }
  for (int l = 0; l < net.layers(); ++l) {
    Mat<S> z = net.w[l] * h;
    z.colwise() += net.b[l];
    if (l + 1 < net.layers()) z = z.cwiseMax(S(0));
    h = std::move(z);
    if (cache) cache->a.push_back(h);
  }
  return h;
}

template <class S>
void backward(const Mlp<S>& net, const MlpCache<S>& cache, const Mat<S>& dy, Mlp<S>* grad, Mat<S>* dx) {
  require(static_cast<int>(cache.a.size()) == net.layers() + 1, ErrorCode::Contract, "backward needs a forward cache");
  Mat<S> delta = dy;
  for (int l = net.layers() - 1; l >= 0; --l) {
    if (grad) {
      grad->w[l].noalias() += delta * cache.a[l].transpose();
      grad->b[l] += delta.rowwise().sum();
    }
    if (l > 0) {
      Mat<S> up = net.w[l].transpose() * delta;
      delta = up.cwiseProduct((cache.a[l].array() > S(0)).template cast<S>().matrix());
    } else if (dx) {
      *dx = net.w[0].transpose() * delta;
    }
  }
}

template <class S>
void soft_update(Mlp<S>& target, const Mlp<S>& online, S tau) {
  require(target.same_shape(online), ErrorCode::InvalidParameter, "soft update between networks of different shape");
  for (int l = 0; l < target.layers(); ++l) {
    target.w[l] = tau * online.w[l] + (S(1) - tau) * target.w[l];
    target.b[l] = tau * online.b[l] + (S(1) - tau) * target.b[l];
  }
}

void SacHyper::validate() const {
  require(lr > 0 && batch > 0 && target_tau > 0 && target_tau <= 1 && alpha >= 0, ErrorCode::Config,
          "SAC hyperparameters must be positive (alpha >= 0, tau <= 1)");
  require(gamma > 0 && gamma < 1, ErrorCode::Config, "discount must lie in (0, 1)");
  require(buffer_capacity >= static_cast<std::size_t>(batch), ErrorCode::Config, "replay capacity below batch size");
  require(!hidden.empty(), ErrorCode::Config, "networks need at least one hidden layer");
  for (int h : hidden) require(h > 0, ErrorCode::Config, "hidden sizes must be positive");
  require(gradient_steps == -1 || gradient_steps >= 0, ErrorCode::Config, "gradient_steps must be -1 or >= 0");
  require(warmup_episodes >= 0, ErrorCode::Config, "warmup_episodes must be >= 0");
}

template <class S>
PolicyBatch<S> policy_eval(const Mlp<S>& actor, const Mat<S>& states, const Mat<S>& eps, const Vec<S>& scale) {
  const int A = static_cast<int>(scale.size());
  require(actor.output_dim() == 2 * A, ErrorCode::InvalidParameter, "actor output must be 2 x action dim");
  require(eps.rows() == A && eps.cols() == states.cols(), ErrorCode::InvalidParameter, "policy noise shape mismatch");
  PolicyBatch<S> pb;
  const Mat<S> out = forward(actor, states, &pb.cache);
  if (!out.allFinite()) fail(ErrorCode::Numerical, "policy network produced non-finite output;" + dump_stats(actor));
  pb.mu = out.topRows(A);
  pb.log_sigma = out.bottomRows(A).cwiseMax(S(kLogSigmaMin)).cwiseMin(S(kLogSigmaMax));
  pb.u = pb.mu + pb.log_sigma.array().exp().matrix().cwiseProduct(eps);
  pb.squashed = pb.u.array().tanh().matrix();
  pb.action = scale.asDiagonal() * pb.squashed;
  const Eigen::Index B = states.cols();
  pb.log_prob.resize(B);
  S log_scale = 0;
  for (int j = 0; j < A; ++j) log_scale += std::log(scale(j));
  for (Eigen::Index c = 0; c < B; ++c) {
    S lp = 0;
    for (int j = 0; j < A; ++j) {
      lp += S(-0.5) * eps(j, c) * eps(j, c) - pb.log_sigma(j, c) - S(kHalfLog2Pi) - log1m_tanh2(pb.u(j, c));
    }
    pb.log_prob(c) = lp - log_scale;
  }
  return pb;
}

PolicySample policy_sample(const MlpParams& actor, const Eigen::VectorXd& state, const Eigen::VectorXd& scale,
                           std::mt19937_64& rng, bool deterministic) {
  require(state.size() == actor.input_dim(), ErrorCode::InvalidParameter,
          "state has " + std::to_string(state.size()) + " entries, policy expects " + std::to_string(actor.input_dim()));
  Mat<float> eps = Mat<float>::Zero(scale.size(), 1);
  if (!deterministic) fill_normal(eps, rng);
  const Mat<float> s = state.cast<float>();
  const Vec<float> sc = scale.cast<float>();
  const auto pb = policy_eval<float>(actor, s, eps, sc);
  PolicySample out;
  out.action.resize(scale.size());
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (deterministic) {
      out.action(j) = std::tanh(static_cast<double>(pb.mu(j, 0))) * scale(j);
    } else {
      out.action(j) = static_cast<double>(pb.squashed(j, 0)) * scale(j);
    }
  }
  out.log_prob = static_cast<double>(pb.log_prob(0));
  return out;
}

double squashed_log_prob(double u, double mu, double log_sigma, double scale) {
  const double z = (u - mu) / std::exp(log_sigma);
  return -0.5 * z * z - log_sigma - kHalfLog2Pi - log1m_tanh2(u) - std::log(scale);
}

template <class S>
SacNets<S> SacNets<S>::create(int state_dim, int action_dim, const Vec<S>& scale, const std::vector<int>& hidden,
                              std::mt19937_64& rng) {
  require(scale.size() == action_dim, ErrorCode::InvalidParameter, "action scale size mismatch");
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    require(scale(j) > S(0), ErrorCode::InvalidParameter, "action scale must be positive");
  std::vector<int> ad{state_dim};
  ad.insert(ad.end(), hidden.begin(), hidden.end());
  ad.push_back(2 * action_dim);
  std::vector<int> qd{state_dim + action_dim};
  qd.insert(qd.end(), hidden.begin(), hidden.end());
  qd.push_back(1);
  SacNets n;
  n.actor = Mlp<S>::init(ad, rng);
  n.q1 = Mlp<S>::init(qd, rng);
  n.q2 = Mlp<S>::init(qd, rng);
  n.q1_target = n.q1;
  n.q2_target = n.q2;
  n.scale = scale;
  return n;
}

template <class S>
bool SacNets<S>::finite() const {
  return actor.finite() && q1.finite() && q2.finite() && q1_target.finite() && q2_target.finite();
}

template <class S>
Mat<S> critic_input(const Mat<S>& s, const Mat<S>& a, const Vec<S>& scale) {
  Mat<S> x(s.rows() + a.rows(), s.cols());
  x.topRows(s.rows()) = s;
  x.bottomRows(a.rows()) = scale.cwiseInverse().asDiagonal() * a;
  return x;
}

template <class S>
Vec<S> bellman_targets(const Batch<S>& batch, const SacNets<S>& nets, const Mat<S>& eps_next, const SacHyper& h) {
  const auto pb = policy_eval(nets.actor, batch.s2, eps_next, nets.scale);
  const Mat<S> x2 = critic_input(batch.s2, pb.action, nets.scale);
  const Mat<S> t1 = forward(nets.q1_target, x2);
  const Mat<S> t2 = forward(nets.q2_target, x2);
  const S alpha = static_cast<S>(h.alpha), gamma = static_cast<S>(h.gamma);
  Vec<S> y(batch.r.size());
  for (Eigen::Index c = 0; c < y.size(); ++c) {
    const S soft = std::min(t1(0, c), t2(0, c)) - alpha * pb.log_prob(c);
    y(c) = batch.r(c) + gamma * (S(1) - batch.done(c)) * soft;
  }
  return y;
}

template <class S>
S q_loss(const Batch<S>& batch, const SacNets<S>& nets, const Mat<S>& eps_next, const SacHyper& h, Mlp<S>* g1,
         Mlp<S>* g2) {
  const Vec<S> y = bellman_targets(batch, nets, eps_next, h);
  const Mat<S> x = critic_input(batch.s, batch.a, nets.scale);
  const S B = static_cast<S>(y.size());
  S loss = 0;
  auto one = [&](const Mlp<S>& q, Mlp<S>* g) {
    MlpCache<S> cache;
    const Mat<S> out = forward(q, x, g ? &cache : nullptr);
    const Mat<S> diff = out - y.transpose();
    loss += S(0.5) * diff.squaredNorm() / B;
    if (g) backward<S>(q, cache, Mat<S>(diff / B), g, nullptr);
  };
  one(nets.q1, g1);
  one(nets.q2, g2);
  return loss;
}

template <class S>
S policy_loss(const Batch<S>& batch, const SacNets<S>& nets, const Mat<S>& eps, const SacHyper& h, Mlp<S>* ga) {
  const auto pb = policy_eval(nets.actor, batch.s, eps, nets.scale);
  const Mat<S> x = critic_input(batch.s, pb.action, nets.scale);
  MlpCache<S> c1, c2;
  const Mat<S> v1 = forward(nets.q1, x, &c1);
  const Mat<S> v2 = forward(nets.q2, x, &c2);
  const Eigen::Index B = x.cols();
  const int A = static_cast<int>(nets.scale.size());
  const int n = static_cast<int>(batch.s.rows());
  const S alpha = static_cast<S>(h.alpha);
  const S invB = S(1) / static_cast<S>(B);

  S loss = 0;
  Mat<S> d1 = Mat<S>::Zero(1, B), d2 = Mat<S>::Zero(1, B);
  for (Eigen::Index c = 0; c < B; ++c) {
    const bool first = v1(0, c) <= v2(0, c);
    loss += alpha * pb.log_prob(c) - (first ? v1(0, c) : v2(0, c));
    (first ? d1 : d2)(0, c) = -invB;
  }
  loss *= invB;
  if (!ga) return loss;

  Mat<S> dx1, dx2;
  backward<S>(nets.q1, c1, d1, nullptr, &dx1);
  backward<S>(nets.q2, c2, d2, nullptr, &dx2);
  Mat<S> dy(2 * A, B);
  for (Eigen::Index c = 0; c < B; ++c) {
    for (int j = 0; j < A; ++j) {
      const S t = pb.squashed(j, c);
      // critic input holds a / scale = tanh(u), so d(input)/du = 1 - t^2
      const S dq_du = (dx1(n + j, c) + dx2(n + j, c)) * (S(1) - t * t);
      const S g_u = alpha * invB * S(2) * t + dq_du;
      const S sigma = std::exp(pb.log_sigma(j, c));
      dy(j, c) = g_u;
      const S raw = pb.cache.a.back()(A + j, c);
      const bool clamped = raw < S(kLogSigmaMin) || raw > S(kLogSigmaMax);
      dy(A + j, c) = clamped ? S(0) : g_u * sigma * eps(j, c) - alpha * invB;
    }
  }
  backward<S>(nets.actor, pb.cache, dy, ga, nullptr);
  return loss;
}

template <class S>
Adam<S>::Adam(const Mlp<S>& like, double lr, double beta1, double beta2, double eps)
    : m_(Mlp<S>::zeros(like.dims)), v_(Mlp<S>::zeros(like.dims)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

template <class S>
void Adam<S>::step(Mlp<S>& net, const Mlp<S>& grad) {
  require(net.same_shape(grad) && net.same_shape(m_), ErrorCode::InvalidParameter, "optimizer shape mismatch");
  ++t_;
  const S b1 = static_cast<S>(b1_), b2 = static_cast<S>(b2_);
  const S c1 = static_cast<S>(1.0 - std::pow(b1_, static_cast<double>(t_)));
  const S c2 = static_cast<S>(1.0 - std::pow(b2_, static_cast<double>(t_)));
  const S lr = static_cast<S>(lr_), eps = static_cast<S>(eps_);
  auto upd = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (int l = 0; l < net.layers(); ++l) {
    upd(net.w[l], m_.w[l], v_.w[l], grad.w[l]);
    upd(net.b[l], m_.b[l], v_.b[l], grad.b[l]);
  }
}

ReplayBuffer::ReplayBuffer(int state_dim, int action_dim, std::size_t capacity)
    : n_(state_dim), m_(action_dim), capacity_(capacity) {
  require(state_dim > 0 && action_dim > 0 && capacity > 0, ErrorCode::InvalidParameter,
          "replay buffer dimensions and capacity must be positive");
}

void ReplayBuffer::add(const Eigen::VectorXd& s, const Eigen::VectorXd& a, double r, const Eigen::VectorXd& s2,
                       bool done) {
  require(s.size() == n_ && s2.size() == n_ && a.size() == m_, ErrorCode::InvalidParameter,
          "transition dimensions do not match the buffer");
  auto put = [](std::vector<float>& dst, std::size_t slot, int width, const double* src) {
    const std::size_t off = slot * static_cast<std::size_t>(width);
    if (dst.size() < off + width) dst.resize(off + width);
    for (int k = 0; k < width; ++k) dst[off + k] = static_cast<float>(src[k]);
  };
  const std::size_t slot = head_;
  const double d = done ? 1.0 : 0.0;
  put(s_, slot, n_, s.data());
  put(a_, slot, m_, a.data());
  put(r_, slot, 1, &r);
  put(s2_, slot, n_, s2.data());
  put(d_, slot, 1, &d);
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::size_t ReplayBuffer::physical(std::size_t logical) const {
  require(logical < size_, ErrorCode::InvalidParameter, "replay index out of range");
  return size_ < capacity_ ? logical : (head_ + logical) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, std::mt19937_64& rng) const {
  require(n <= size_, ErrorCode::InvalidParameter, "cannot sample more transitions than stored");
  // Floyd's algorithm: n distinct values from [0, size).
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t j = size_ - n; j < size_; ++j) {
    std::uniform_int_distribution<std::size_t> u(0, j);
    const std::size_t t = u(rng);
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(j);
    }
  }
  return out;
}

Batch<float> ReplayBuffer::gather(const std::vector<std::size_t>& idx) const {
  const Eigen::Index B = static_cast<Eigen::Index>(idx.size());
  Batch<float> b;
  b.s.resize(n_, B);
  b.s2.resize(n_, B);
  b.a.resize(m_, B);
  b.r.resize(B);
  b.done.resize(B);
  for (Eigen::Index c = 0; c < B; ++c) {
    const std::size_t k = idx[c];
    require(k < size_, ErrorCode::InvalidParameter, "replay slot out of range");
    for (int i = 0; i < n_; ++i) {
      b.s(i, c) = s_[k * n_ + i];
      b.s2(i, c) = s2_[k * n_ + i];
    }
    for (int i = 0; i < m_; ++i) b.a(i, c) = a_[k * m_ + i];
    b.r(c) = r_[k];
    b.done(c) = d_[k];
  }
  return b;
}

std::vector<double> sliding_mean(const std::vector<double>& x, int window) {
  require(window > 0, ErrorCode::InvalidParameter, "sliding window must be positive");
  std::vector<double> out(x.size());
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i];
    if (i >= static_cast<std::size_t>(window)) sum -= x[i - window];
    out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, window));
  }
  return out;
}

TrainResult train(Environment& env, const SacHyper& hyper, const TrainOptions& opts, std::mt19937_64& rng) {
  hyper.validate();
  require(opts.episodes >= 0, ErrorCode::Config, "episode count must be >= 0");
  const int n = env.state_dim(), A = env.action_dim();
  const Eigen::VectorXd scale = env.action_scale();

  TrainResult res;
  res.nets = SacNets<float>::create(n, A, scale.cast<float>(), hyper.hidden, rng);
  auto& nets = res.nets;
  Adam<float> opt_a(nets.actor, hyper.lr), opt_1(nets.q1, hyper.lr), opt_2(nets.q2, hyper.lr);
  ReplayBuffer buffer(n, A, hyper.buffer_capacity);
  Mlp<float> ga = Mlp<float>::zeros(nets.actor.dims);
  Mlp<float> g1 = Mlp<float>::zeros(nets.q1.dims), g2 = Mlp<float>::zeros(nets.q2.dims);
  const auto tau = static_cast<float>(hyper.target_tau);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double window_sum = 0;

  auto diverged = [&](const std::string& what) {
    if (opts.on_divergence) opts.on_divergence(nets);
    fail(ErrorCode::Numerical, "training diverged: " + what);
  };

  for (int ep = 0; ep < opts.episodes; ++ep) {
    Eigen::VectorXd s = env.reset(rng);
    EpisodeLog log;
    log.episode = ep;
    for (;;) {
      Eigen::VectorXd a(A);
      if (ep < hyper.warmup_episodes) {
        for (int j = 0; j < A; ++j) a(j) = unit(rng) * scale(j);
      } else {
        a = policy_sample(nets.actor, s, scale, rng, false).action;
      }
      EnvStep st = env.step(a);
      buffer.add(s, a, st.reward, st.state, st.done);
      log.episode_return += st.reward;
      ++log.steps;
      s = std::move(st.state);
      if (st.done) break;
    }

    const int G = hyper.gradient_steps < 0 ? log.steps : hyper.gradient_steps;
    if (buffer.size() >= static_cast<std::size_t>(hyper.batch)) {
      double ql = 0, pl = 0;
      Mat<float> eps(A, hyper.batch);
      for (int g = 0; g < G; ++g) {
        const Batch<float> batch = buffer.gather(buffer.sample_indices(hyper.batch, rng));
        fill_normal(eps, rng);
        g1.set_zero();
        g2.set_zero();
        const float lq = q_loss(batch, nets, eps, hyper, &g1, &g2);
        if (!std::isfinite(lq)) diverged("critic loss is not finite at episode " + std::to_string(ep));
        opt_1.step(nets.q1, g1);
        opt_2.step(nets.q2, g2);

        fill_normal(eps, rng);
        ga.set_zero();
        const float lp = policy_loss(batch, nets, eps, hyper, &ga);
        if (!std::isfinite(lp)) diverged("policy loss is not finite at episode " + std::to_string(ep));
        opt_a.step(nets.actor, ga);

        soft_update(nets.q1_target, nets.q1, tau);
        soft_update(nets.q2_target, nets.q2, tau);
        ql += lq;
        pl += lp;
      }
      if (G > 0) {
        log.q_loss = ql / G;
        log.policy_loss = pl / G;
      }
    }

    res.returns.push_back(log.episode_return);
    window_sum += log.episode_return;
    const std::size_t w = static_cast<std::size_t>(opts.sliding_window);
    if (res.returns.size() > w) window_sum -= res.returns[res.returns.size() - 1 - w];
    log.sliding_mean = window_sum / static_cast<double>(std::min(res.returns.size(), w));
    res.sliding_mean.push_back(log.sliding_mean);
    res.log.push_back(log);
    if (opts.on_episode) opts.on_episode(log);
    if (opts.keep_going && !opts.keep_going(log, nets)) break;
  }
  return res;
}

#define SFDIA_INSTANTIATE(S)                                                                                       \
  template struct Mlp<S>;                                                                                          \
  template Mat<S> forward<S>(const Mlp<S>&, const Mat<S>&, MlpCache<S>*);                                          \
  template void backward<S>(const Mlp<S>&, const MlpCache<S>&, const Mat<S>&, Mlp<S>*, Mat<S>*);                   \
  template void soft_update<S>(Mlp<S>&, const Mlp<S>&, S);                                                         \
  template PolicyBatch<S> policy_eval<S>(const Mlp<S>&, const Mat<S>&, const Mat<S>&, const Vec<S>&);             \
  template struct SacNets<S>;                                                                                      \
  template Mat<S> critic_input<S>(const Mat<S>&, const Mat<S>&, const Vec<S>&);                                    \
  template Vec<S> bellman_targets<S>(const Batch<S>&, const SacNets<S>&, const Mat<S>&, const SacHyper&);          \
  template S q_loss<S>(const Batch<S>&, const SacNets<S>&, const Mat<S>&, const SacHyper&, Mlp<S>*, Mlp<S>*);      \
  template S policy_loss<S>(const Batch<S>&, const SacNets<S>&, const Mat<S>&, const SacHyper&, Mlp<S>*);          \
  template class Adam<S>;

SFDIA_INSTANTIATE(float)
SFDIA_INSTANTIATE(double)

#undef SFDIA_INSTANTIATE

}  // namespace sfdia::rl
