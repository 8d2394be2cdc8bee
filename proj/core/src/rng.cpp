#include "kstage/rng.hpp"

#include <cmath>

namespace kstage {

namespace {

constexpr std::uint64_t kMultiplier = 0xD2B74407B1CE6E93ULL;
constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;  // golden-ratio increment

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

void RngStream::refill() {
  std::uint64_t x0 = lo_;
  std::uint64_t x1 = hi_;
  std::uint64_t k = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi, lo;
    mulhilo(kMultiplier, x0, hi, lo);
    x0 = hi ^ k ^ x1;
    x1 = lo;
    k += kWeyl;
  }
  buf_[0] = x0;
  buf_[1] = x1;
  buffered_ = 2;
  ++lo_;  // counter ticks once per block; 2^64 blocks per stream
}

std::uint64_t RngStream::next_u64() {
  if (buffered_ == 0) refill();
  return buf_[--buffered_];
}

double RngStream::exponential() { return -std::log(uniform01()); }

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

}  // namespace kstage
