#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace seld {

/// Seedable 64-bit generator used by every stochastic operation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard library distributions are implementation-defined,
/// so the draws below are spelled out explicitly:
///   - uniform_int(lo, hi): draws below 2^64 mod range are rejected, then the
///     result is lo + draw % range (unbiased).
///   - uniform01(): top 53 bits of one draw scaled by 2^-53, in [0, 1).
///   - normal(): Box-Muller on two uniform01 draws, both outputs used in turn.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
/// FNV-1a hash of a string, for deriving per-file seeds.
std::uint64_t hash_string(std::string_view s);

}  // namespace seld
