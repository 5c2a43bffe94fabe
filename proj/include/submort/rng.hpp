#pragma once

#include <array>
#include <cstdint>

namespace submort {

/// SplitMix64; used to expand seeds and derive decorrelated stream states.
struct SplitMix64 {
  std::uint64_t state = 0;
  std::uint64_t next();
};

/// Hash (seed, stream) into a single 64-bit value.  Distinct streams derived
/// from the same seed give unrelated generator states, which is what makes
/// per-chain and per-county reproducibility work.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream);

/// xoshiro256++ with deterministic, locale-free sampling helpers.
/// All distributions are generated in-house so that a (seed, stream) pair
/// produces the same values on every platform and every run.
class Rng {
public:
  Rng() : Rng(0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Uniform on (lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal (Box-Muller, cached pair).
  double normal();
  double normal(double mean, double sd);
  /// Poisson draw; inversion for small means, PTRS rejection for large.
  long long poisson(double mean);

private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace submort
