#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace capbound::par {

// Fixed block size for reductions. Blocks are summed independently and then
// combined in block order, so results are bit-identical for any thread count
// (including the serial fallback when OpenMP is unavailable).
inline constexpr std::size_t kBlock = 2048;

inline std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

// Runs f(block_index, begin, end) over [0, n) split into kBlock-sized chunks.
template <class F>
void for_each_block(std::size_t n, F&& f) {
  const std::int64_t nb = static_cast<std::int64_t>(block_count(n));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t b = 0; b < nb; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
    const std::size_t end = begin + kBlock < n ? begin + kBlock : n;
    f(static_cast<std::size_t>(b), begin, end);
  }
}

// Plain parallel loop over [0, n); each index independent.
template <class F>
void for_each_index(std::size_t n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    f(static_cast<std::size_t>(i));
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace capbound::par
