#pragma once

#include <cstdint>
#include <random>

namespace crosstune {

// Seeded random source with platform-independent draws. The standard
// distributions are implementation-defined, so integer and real draws are
// derived from raw mt19937_64 output here to keep runs reproducible across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1), 53 bits of precision.
  double uniform();

  // Uniform integer in [lo, hi], both inclusive. Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer, used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed);

}  // namespace crosstune
