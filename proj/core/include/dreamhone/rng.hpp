#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dreamhone {

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so uniform draws are derived
/// from the raw 64-bit engine output here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stable 64-bit hash of a string (FNV-1a).
std::uint64_t hash_string(std::string_view s);

/// Derives an independent stream seed from a base seed and a key.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  return splitmix64(seed ^ splitmix64(hash_string(key)));
}

}  // namespace dreamhone
