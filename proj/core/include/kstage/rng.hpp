#pragma once

#include <cstdint>
#include <cstddef>

namespace kstage {

/* Identifies one deterministic random stream: a 64-bit key (the master seed)
 * plus a 64-bit stream id. Streams with the same key and different ids are
 * statistically independent, so replicas can run in any order, on any number
 * of workers, and still produce identical output. */
struct RngSeed {
  std::uint64_t key = 0;
  std::uint64_t stream = 0;
};

/* Layout of composed stream ids used by the study drivers:
 * bits [56,64) component, [40,56) series (e.g. index into an n grid),
 * [0,40) replica. */
constexpr std::uint64_t compose_stream(std::uint64_t component, std::uint64_t series,
                                       std::uint64_t replica) {
  return (component << 56) | (series << 40) | replica;
}

/* Counter-based generator (Philox2x64-10). The i-th block of a stream is a
 * pure function of (key, stream, i); nothing is shared between streams. */
class RngStream {
 public:
  explicit RngStream(RngSeed seed) : key_(seed.key), hi_(seed.stream) {}
  RngStream(std::uint64_t key, std::uint64_t stream) : key_(key), hi_(stream) {}

  RngSeed seed() const { return {key_, hi_}; }

  std::uint64_t next_u64();

  /* Uniform on the open interval (0,1); never returns 0 or 1, so logs of
   * either u or 1-u are finite. */
  double uniform01() { return (static_cast<double>(next_u64() >> 11) + 0.5) * kInv53; }

  /* Unit-rate exponential. */
  double exponential();

  /* Standard normal via Box-Muller; draws two uniforms per pair and caches
   * the second value, so the sequence is a deterministic function of the
   * stream position. */
  double normal();

 private:
  void refill();

  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53

  std::uint64_t key_;
  std::uint64_t hi_;       // stream id: high word of the counter
  std::uint64_t lo_ = 0;   // position: low word of the counter
  std::uint64_t buf_[2] = {0, 0};
  int buffered_ = 0;
  double cached_normal_ = 0;
  bool has_cached_normal_ = false;
};

}  // namespace kstage
