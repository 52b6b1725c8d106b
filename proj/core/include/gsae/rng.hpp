#pragma once

#include <cstdint>

namespace gsae {

// xoshiro256** with splitmix64 seeding and an explicit Box-Muller normal.
//
// The standard <random> distributions are implementation-defined, which would
// break the byte-identical-output contract across toolchains. Everything
// random in this library flows through this generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream for (seed, tag, index). Each dataset column, sample,
  // or Monte Carlo draw gets its own stream so that parallel and serial
  // generation agree bit for bit regardless of thread count.
  static Rng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal (Box-Muller, pair cached).
  double normal();
  // Uniform integer in [0, n), unbiased via rejection. n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  Rng() = default;

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gsae
