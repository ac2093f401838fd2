// Binary SAC checkpoint, little-endian throughout:
//
//   magic     8 bytes  "SFDIACKP"
//   version   u32      (1)
//   endian    u32      0x01020304 as written by a little-endian writer
//   seed      u64
//   episodes  u32      episodes trained
//   hyper     f64 lr, gamma, target_tau, alpha; u32 batch; u64 capacity;
//             i32 gradient_steps; i32 warmup_episodes
//   actions   u32 A, then A x f64 action scale
//   networks  u32 count, then per network:
//               u8 name length, name bytes
//               u32 layer count L, (L + 1) x u32 dims
//               L x u8 activation tag (0 relu, 1 linear)
//               per layer: rows x cols f64 weights row-major, rows x f64 bias
//
// A "<path>.txt" sidecar repeats the header as key = value lines.
#pragma once

#include <cstdint>
#include <string>

#include "sfdia/sac.hpp"

namespace sfdia::rl {

constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  SacNets<float> nets;
  SacHyper hyper;
  std::uint64_t seed = 0;
  std::uint32_t episodes = 0;
  std::string config_hash;  // sidecar only
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sfdia::rl
