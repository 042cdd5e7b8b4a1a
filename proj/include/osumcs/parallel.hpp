#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace osumcs::par {

// Fixed block size for deterministic reductions. Partial sums are formed per
// block and folded in block order, so the result is independent of the thread
// count and the schedule.
inline constexpr std::ptrdiff_t kBlock = 4096;

template <class Acc, class BlockFn, class FoldFn>
Acc blocked_reduce(std::ptrdiff_t n, Acc zero, BlockFn block, FoldFn fold) {
  if (n <= 0) return zero;
  const std::ptrdiff_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<Acc> partial(static_cast<std::size_t>(nblocks), zero);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    const std::ptrdiff_t lo = b * kBlock;
    const std::ptrdiff_t hi = lo + kBlock < n ? lo + kBlock : n;
    block(lo, hi, partial[static_cast<std::size_t>(b)]);
  }
  Acc acc = zero;
  for (std::ptrdiff_t b = 0; b < nblocks; ++b)
    fold(acc, partial[static_cast<std::size_t>(b)]);
  return acc;
}

// Independent per-index work (writes to disjoint slots only).
template <class Fn>
void parallel_for(std::ptrdiff_t n, Fn fn) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

template <class Fn>
void parallel_for_dynamic(std::ptrdiff_t n, Fn fn) {
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace osumcs::par
