#include "emlp/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "emlp/error.hpp"

namespace emlp {

std::uint64_t RngState::next_below(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("next_below: bound must be positive");
  // Rejection sampling on the largest multiple of bound.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

DenseMatrix sample_uniform(RngState& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  if (!(lo < hi)) {
    throw ParameterError("sample_uniform: need lo < hi, got lo=" + std::to_string(lo) +
                         " hi=" + std::to_string(hi));
  }
  DenseMatrix out(rows, cols);
  const double width = hi - lo;
  const double below_hi = std::nextafter(hi, lo);
  for (double& v : out.values()) {
    const double x = lo + width * rng.next_unit();
    v = x < hi ? x : below_hi;
  }
  return out;
}

std::vector<std::size_t> random_permutation(std::size_t n, RngState& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace emlp
