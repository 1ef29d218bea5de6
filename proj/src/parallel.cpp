#include "effham/parallel.hpp"

namespace effham::par {

namespace {
int g_workers = 0;
}

int workers() {
  if (g_workers > 0) return g_workers;
  if (const char* env = std::getenv("EFFHAM_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_workers(int n) { g_workers = n; }

}  // namespace effham::par
