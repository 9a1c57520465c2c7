#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "emlp/matrix.hpp"

namespace emlp {

/// Seeded deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Conversions to doubles and bounded integers are done here rather
/// than through <random> distributions, which are implementation-defined, so
/// a seed reproduces the same stream on every platform and compiler.
///
/// Single owner: do not share one RngState between threads.
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t next_below(std::uint64_t bound);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Matrix of i.i.d. uniform draws in [lo, hi), filled row-major.
DenseMatrix sample_uniform(RngState& rng, std::size_t rows, std::size_t cols, double lo, double hi);

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, RngState& rng);

}  // namespace emlp
