#pragma once

#include <array>
#include <cstdint>

namespace balasso {

// Philox4x32-10 counter-based generator. The 64-bit seed is the key, the
// stream id occupies the upper half of the 128-bit counter and the block
// index the lower half, so every (seed, stream) pair is an independent,
// reproducible sequence and streams can be handed out without coordination.
class RngHandle {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit RngHandle(std::uint64_t seed = 0, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Handle for a sibling stream with the same seed.
  RngHandle split(std::uint64_t stream) const { return RngHandle(seed_, stream); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  static Block philox(Block counter, std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace balasso
