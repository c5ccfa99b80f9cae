#pragma once

#include <cmath>
#include <cstdint>

namespace dvar {

// splitmix64 finalizer (Steele, Lea, Flood; Vigna's fixed-increment variant).
inline uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

/// Deterministic splittable random stream. Stream (base_seed, id) is fully
/// decided by its two integers, so batch members can be generated on any
/// thread in any order without changing results.
class RngStream {
 public:
  RngStream(uint64_t base_seed, uint64_t stream_id)
      : state_(mix64(mix64(base_seed + 0x9E3779B97F4A7C15ULL) ^
                     mix64(stream_id + 0xD1B54A32D192ED03ULL))),
        has_cached_gaussian_(false),
        cached_gaussian_(0.0) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t next_below(uint64_t n) {
    // 64-bit multiply-shift; bias is negligible for the desk-scale n used here.
    unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<uint64_t>(wide >> 64);
  }

  /// Standard normal via Box-Muller; second value of each pair is cached.
  double next_gaussian() {
    if (has_cached_gaussian_) {
      has_cached_gaussian_ = false;
      return cached_gaussian_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_gaussian_ = r * std::sin(theta);
    has_cached_gaussian_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_;
  bool has_cached_gaussian_;
  double cached_gaussian_;
};

// FNV-1a over a byte buffer; used for config hashes and output comparisons.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xCBF29CE484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace dvar
