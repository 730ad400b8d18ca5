#ifndef GTR_RNG_HPP
#define GTR_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace gtr {

/// Counter-based RNG stream (Philox4x32-10).
///
/// A stream is addressed by (seed, stream id); draws consume a 64-bit counter.
/// The output for draw k of stream s depends only on (seed, s, k), never on
/// which thread made the call, so Monte Carlo tallies are bit-identical for a
/// fixed master seed regardless of the worker count. Substreams are derived
/// with derive() so that trial t of request r gets its own independent stream.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    stream_[0] = static_cast<std::uint32_t>(stream);
    stream_[1] = static_cast<std::uint32_t>(stream >> 32);
  }

  /// Mixes two 64-bit values into a substream id (SplitMix64 finalizer).
  static std::uint64_t derive(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// FNV-1a of a string, for naming streams after request ids.
  static std::uint64_t hash_name(const char* s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ull;
    return h;
  }

  std::uint64_t next_u64() {
    if (buf_pos_ >= 2) refill();
    return buf_[buf_pos_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal via Box-Muller; second value of each pair is cached.
  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    double u1, u2;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
  }

  /// Exponential(1).
  double exponential() {
    double u;
    do {
      u = uniform01();
    } while (u <= 0.0);
    return -std::log(u);
  }

 private:
  static void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
  }

  void refill() {
    std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(counter_),
                                        static_cast<std::uint32_t>(counter_ >> 32), stream_[0],
                                        stream_[1]};
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      philox_round(ctr, k0, k1);
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buf_[0] = (std::uint64_t{ctr[0]} << 32) | ctr[1];
    buf_[1] = (std::uint64_t{ctr[2]} << 32) | ctr[3];
    buf_pos_ = 0;
    ++counter_;
  }

  std::uint32_t key_[2];
  std::uint32_t stream_[2];
  std::uint64_t counter_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int buf_pos_ = 2;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace gtr

#endif  // GTR_RNG_HPP
