#include "sfdia/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "sfdia/error.hpp"

namespace sfdia::rl {

namespace {

constexpr char kMagic[8] = {'S', 'F', 'D', 'I', 'A', 'C', 'K', 'P'};
constexpr std::uint32_t kEndianMarker = 0x01020304u;

template <class T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  template <class T>
  void put(T v) {
    v = to_le(v);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string path) : buf_(std::move(data)), path_(std::move(path)) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_le(v);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    require(pos_ + n <= buf_.size(), ErrorCode::Io, "checkpoint '" + path_ + "' is truncated");
  }
  std::vector<char> buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

void put_net(Writer& w, const std::string& name, const Mlp<float>& net) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layers()));
  for (int d : net.dims) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  for (int l = 0; l < net.layers(); ++l) w.put<std::uint8_t>(l + 1 < net.layers() ? 0 : 1);
  for (int l = 0; l < net.layers(); ++l) {
    const auto& m = net.w[l];
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.put<double>(m(i, j));
    for (Eigen::Index i = 0; i < net.b[l].size(); ++i) w.put<double>(net.b[l](i));
  }
}

Mlp<float> get_net(Reader& r, const std::string& expect, const std::string& path) {
  const auto len = r.get<std::uint8_t>();
  const std::string name = r.str(len);
  require(name == expect, ErrorCode::Io, "checkpoint '" + path + "': expected network '" + expect + "', found '" + name + "'");
  const auto layers = r.get<std::uint32_t>();
  require(layers >= 1 && layers < 64, ErrorCode::Io, "checkpoint '" + path + "': bad layer count");
  std::vector<int> dims;
  for (std::uint32_t k = 0; k <= layers; ++k) {
    const auto d = r.get<std::uint32_t>();
    require(d >= 1 && d < (1u << 20), ErrorCode::Io, "checkpoint '" + path + "': bad layer size");
    dims.push_back(static_cast<int>(d));
  }
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto tag = r.get<std::uint8_t>();
    const std::uint8_t want = l + 1 < layers ? 0 : 1;
    require(tag == want, ErrorCode::Io, "checkpoint '" + path + "': unsupported activation layout");
  }
  auto net = Mlp<float>::zeros(dims);
  for (int l = 0; l < net.layers(); ++l) {
    auto& m = net.w[l];
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<float>(r.get<double>());
    for (Eigen::Index i = 0; i < net.b[l].size(); ++i) net.b[l](i) = static_cast<float>(r.get<double>());
  }
  return net;
}

const char* const kNetNames[] = {"actor", "q1", "q2", "q1_target", "q2_target"};

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const auto& n = ck.nets;
  require(n.finite(), ErrorCode::Numerical, "refusing to save a checkpoint with non-finite weights");
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(kEndianMarker);
  w.put<std::uint64_t>(ck.seed);
  w.put<std::uint32_t>(ck.episodes);
  const auto& h = ck.hyper;
  w.put<double>(h.lr);
  w.put<double>(h.gamma);
  w.put<double>(h.target_tau);
  w.put<double>(h.alpha);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(h.batch));
  w.put<std::uint64_t>(h.buffer_capacity);
  w.put<std::int32_t>(h.gradient_steps);
  w.put<std::int32_t>(h.warmup_episodes);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(n.scale.size()));
  for (Eigen::Index j = 0; j < n.scale.size(); ++j) w.put<double>(n.scale(j));
  const Mlp<float>* nets[] = {&n.actor, &n.q1, &n.q2, &n.q1_target, &n.q2_target};
  w.put<std::uint32_t>(5);
  for (int k = 0; k < 5; ++k) put_net(w, kNetNames[k], *nets[k]);

  {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write checkpoint '" + path + "'");
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    if (!out) fail(ErrorCode::Io, "write failed for '" + path + "'");
  }

  std::ofstream txt(path + ".txt");
  if (!txt) fail(ErrorCode::Io, "cannot write checkpoint sidecar '" + path + ".txt'");
  txt << std::setprecision(17);
  txt << "format = sfdia-checkpoint\nversion = " << kCheckpointVersion << "\nendianness = little\n";
  txt << "seed = " << ck.seed << "\nepisodes = " << ck.episodes << "\n";
  if (!ck.config_hash.empty()) txt << "config_hash = " << ck.config_hash << "\n";
  txt << "lr = " << h.lr << "\ngamma = " << h.gamma << "\ntarget_tau = " << h.target_tau << "\nalpha = " << h.alpha
      << "\nbatch = " << h.batch << "\nbuffer_capacity = " << h.buffer_capacity
      << "\ngradient_steps = " << h.gradient_steps << "\nwarmup_episodes = " << h.warmup_episodes << "\n";
  txt << "action_scale =";
  for (Eigen::Index j = 0; j < n.scale.size(); ++j) txt << " " << n.scale(j);
  txt << "\n";
  for (int k = 0; k < 5; ++k) {
    txt << kNetNames[k] << " =";
    for (int d : nets[k]->dims) txt << " " << d;
    txt << " (relu hidden, linear output)\n";
  }
  if (!txt) fail(ErrorCode::Io, "write failed for '" + path + ".txt'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open checkpoint '" + path + "'");
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(data), path);
  require(r.str(8) == std::string(kMagic, 8), ErrorCode::Io, "'" + path + "' is not an sfdia checkpoint");
  const auto version = r.get<std::uint32_t>();
  require(version == kCheckpointVersion, ErrorCode::Io,
          "checkpoint '" + path + "' has version " + std::to_string(version));
  require(r.get<std::uint32_t>() == kEndianMarker, ErrorCode::Io, "checkpoint '" + path + "' has a bad endianness marker");

  Checkpoint ck;
  ck.seed = r.get<std::uint64_t>();
  ck.episodes = r.get<std::uint32_t>();
  auto& h = ck.hyper;
  h.lr = r.get<double>();
  h.gamma = r.get<double>();
  h.target_tau = r.get<double>();
  h.alpha = r.get<double>();
  h.batch = static_cast<int>(r.get<std::uint32_t>());
  h.buffer_capacity = r.get<std::uint64_t>();
  h.gradient_steps = r.get<std::int32_t>();
  h.warmup_episodes = r.get<std::int32_t>();
  const auto A = r.get<std::uint32_t>();
  require(A >= 1 && A < 64, ErrorCode::Io, "checkpoint '" + path + "': bad action dimension");
  ck.nets.scale.resize(A);
  for (std::uint32_t j = 0; j < A; ++j) ck.nets.scale(j) = static_cast<float>(r.get<double>());
  require(r.get<std::uint32_t>() == 5, ErrorCode::Io, "checkpoint '" + path + "': expected 5 networks");
  Mlp<float>* nets[] = {&ck.nets.actor, &ck.nets.q1, &ck.nets.q2, &ck.nets.q1_target, &ck.nets.q2_target};
  for (int k = 0; k < 5; ++k) *nets[k] = get_net(r, kNetNames[k], path);
  require(r.at_end(), ErrorCode::Io, "checkpoint '" + path + "' has trailing bytes");
  require(ck.nets.actor.output_dim() == 2 * static_cast<int>(A), ErrorCode::Io,
          "checkpoint '" + path + "': actor output does not match the action dimension");
  std::vector<int> hidden(ck.nets.actor.dims.begin() + 1, ck.nets.actor.dims.end() - 1);
  h.hidden = hidden;
  return ck;
}

}  // namespace sfdia::rl
