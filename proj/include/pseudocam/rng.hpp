#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pseudocam {

/// Seeded generator with distribution code written out here rather than taken
/// from <random>, whose distributions are implementation-defined. Streams are
/// therefore identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal (Box-Muller, one draw cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a per-item stream derived from a global seed and a string key
/// (e.g. a video id). Independent of processing order.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view key);

std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t salt);

}  // namespace pseudocam
