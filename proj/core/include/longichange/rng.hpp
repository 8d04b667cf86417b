#pragma once

#include <cstdint>

namespace lc {

/// Deterministic xoshiro256** generator. All randomness in the pipeline flows
/// through explicitly passed Rng instances; there is no global RNG state.
/// Sub-streams derived via derive() are statistically independent of the
/// parent and of each other, which keeps parallel sample synthesis
/// reproducible regardless of scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal via Box-Muller (one fresh draw per call).
  double normal();

  /// Normal(0, sigma) rejected outside [-limit*sigma, limit*sigma].
  double truncated_normal(double sigma, double limit = 3.0);

  /// Child generator for stream `id`, independent of this one.
  Rng derive(std::uint64_t id) const;
  Rng derive(std::uint64_t a, std::uint64_t b) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t s_[4] = {0, 0, 0, 0};
};

/// splitmix64 step; also used for seed mixing and cheap hashing.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace lc
