// Apache License, Version 2.0, refer to LICENSE.txt
//
// OpenMP helpers with thread-count independent results. Reductions are
// split into fixed-size chunks whose partial sums are combined in chunk
// order, so the floating-point result is identical for any thread count
// (including 1). Serial reference loops live next to each production
// kernel and are compared against it in tests/test_parallel.cpp.

#ifndef RAINGP_PARALLEL_HPP
#define RAINGP_PARALLEL_HPP

#include <cstddef>
#include <vector>

namespace raingp {

inline constexpr std::size_t kReduceChunk = 1024;

// Fixed-order chunked sum of term(i) for i in [0, n). Bitwise identical to
// its own single-threaded execution for any OMP thread count.
template <class Term>
double chunked_sum(std::size_t n, Term&& term) {
  if (n == 0) return 0.0;
  const std::size_t n_chunks = (n + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> partial(n_chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < static_cast<long long>(n_chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    const std::size_t hi = lo + kReduceChunk < n ? lo + kReduceChunk : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

// Plain serial loop, kept as the reference implementation for chunked_sum.
template <class Term>
double serial_sum(std::size_t n, Term&& term) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += term(i);
  return s;
}

// Parallel loop over independent iterations writing to disjoint slots.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    body(static_cast<std::size_t>(i));
  }
}

// Dynamic-schedule variant for uneven tasks (replicate fan-out). Safe for
// determinism only when each task's output depends solely on its index.
template <class Body>
void parallel_for_dynamic(std::size_t n, Body&& body) {
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    body(static_cast<std::size_t>(i));
  }
}

}  // namespace raingp

#endif
