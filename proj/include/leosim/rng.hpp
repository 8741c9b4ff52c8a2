#pragma once

#include <cstdint>
#include <random>

namespace leosim {

/// Seeded random stream. The engine is std::mt19937_64, whose output sequence
/// is fixed by the standard; all distributions are implemented here so a seed
/// yields the same draws on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u = 0.0;
    while (u == 0.0) u = uniform();
    return u;
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Gamma(shape, scale); Marsaglia-Tsang squeeze, with the shape < 1 boost.
  double gamma(double shape, double scale);

  /// Poisson draw: sequential-search inversion for lambda < 30, Hormann's
  /// transformed rejection (PTRS) above.
  std::int64_t poisson(double lambda);

 private:
  std::int64_t poisson_inversion(double lambda);
  std::int64_t poisson_ptrs(double lambda);

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer applied to (seed, stream). Used to derive independent
/// sub-stream seeds from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Stream identifiers for derive_seed.
inline constexpr std::uint64_t kEnvironmentStream = 1;
inline constexpr std::uint64_t kPolicyStream = 2;
inline constexpr std::uint64_t kTrainingStream = 3;

}  // namespace leosim
