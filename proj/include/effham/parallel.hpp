#pragma once

#include <cstdlib>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace effham::par {

/// Process-wide default worker count: EFFHAM_WORKERS env var, else the
/// OpenMP default, else 1. CLI --workers overrides via set_workers().
int workers();
void set_workers(int n);

/// Parallel loop over [0, n). Every iteration writes only its own outputs, so
/// results are identical for any worker count; reductions stay with the caller.
template <class F>
inline void for_index(long n, F&& body, int nworkers = 0) {
  if (nworkers <= 0) nworkers = workers();
#if defined(_OPENMP)
  if (nworkers > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(nworkers)
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
#endif
  for (long i = 0; i < n; ++i) body(i);
}

/// Serial reference used by the kernel-equivalence tests and the benchmark.
template <class F>
inline void for_index_serial(long n, F&& body) {
  for (long i = 0; i < n; ++i) body(i);
}

}  // namespace effham::par
