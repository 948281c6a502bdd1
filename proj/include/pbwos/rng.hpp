#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace pbwos {

/// Philox4x32-10 block function (Salmon et al., counter-based PRNG).
/// Pure function of (counter, key); used as the core of RngStream.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                   std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Reproducible random stream identified by (seed, stream_id).
///
/// The seed is the Philox key and the stream id occupies the upper half of
/// the 128-bit counter, so distinct stream ids address disjoint counter
/// ranges of one bijection: streams never overlap, and a given
/// (seed, stream_id) always replays the same sequence. A stream can emit
/// 2^66 bytes before its block counter wraps.
///
/// Single owner; one stream per worker.
class RngStream {
 public:
  using result_type = std::uint32_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_{static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u32(); }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform double on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  std::uint64_t seed() const {
    return (std::uint64_t{key_[1]} << 32) | key_[0];
  }
  std::uint64_t stream_id() const {
    return (std::uint64_t{stream_[1]} << 32) | stream_[0];
  }
  /// Number of Philox blocks consumed so far.
  std::uint64_t blocks_used() const { return block_; }

 private:
  void refill() {
    buffer_ = philox4x32_10({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                             stream_[0], stream_[1]},
                            key_);
    ++block_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int pos_ = 4;
};

/// Packs the solver's (point, phase, block) coordinates into a stream id.
/// Points get 20 bits, phases (strata) 12 bits, blocks 32 bits.
constexpr std::uint64_t make_stream_id(std::uint64_t point, std::uint64_t phase, std::uint64_t block) {
  return ((point & 0xFFFFFu) << 44) | ((phase & 0xFFFu) << 32) | (block & 0xFFFFFFFFu);
}

}  // namespace pbwos
