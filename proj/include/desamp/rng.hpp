#pragma once

#include <cmath>
#include <cstdint>

#include "desamp/matrix.hpp"

namespace desamp {

// Counter-based RNG: Philox2x64-10 keyed by the seed, with the stream id
// occupying half of the counter space. Identical (seed, stream, counter)
// reproduce byte-identical output across platforms and builds; distinct
// stream ids index disjoint counter blocks of the same keyed permutation.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() {
    if (buffered_ == 0) {
      refill();
    }
    return buf_[--buffered_];
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n) by rejection, bias-free.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw ValidationError("next_below: n must be positive");
    const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1;
    do {
      u1 = next_uniform();
    } while (u1 <= 0.0);
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                      std::uint64_t& lo) {
    const unsigned __int128 p =
        static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
  }

  void refill() {
    std::uint64_t c0 = counter_++;
    std::uint64_t c1 = stream_;
    std::uint64_t key = seed_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t hi, lo;
      mulhilo(0xD2B74407B1CE6E93ULL, c0, hi, lo);
      c0 = hi ^ key ^ c1;
      c1 = lo;
      key += 0x9E3779B97F4A7C15ULL;
    }
    buf_[0] = c0;
    buf_[1] = c1;
    buffered_ = 2;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int buffered_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

inline Vector standard_normal_vector(RngStream& stream, std::size_t dim) {
  if (dim == 0) throw ValidationError("standard_normal_vector: dim must be >= 1");
  Vector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = stream.next_normal();
  return v;
}

}  // namespace desamp
