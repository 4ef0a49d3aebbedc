#pragma once

// Thread control for the row-parallel kernels. Every parallel loop in the
// library writes disjoint outputs per index and reduces serially afterwards,
// so results do not depend on the thread count.

#include <cstdlib>
#include <string>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace entromap {

inline int available_threads() {
#if defined(_OPENMP)
  return omp_get_num_procs();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#if defined(_OPENMP)
  omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
#else
  (void)n;
#endif
}

inline int current_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Reads ENTROMAP_THREADS; returns 0 when unset or unparsable.
inline int threads_from_env() {
  const char* env = std::getenv("ENTROMAP_THREADS");
  if (env == nullptr) return 0;
  try {
    const int v = std::stoi(env);
    return v > 0 ? v : 0;
  } catch (...) {
    return 0;
  }
}

}  // namespace entromap
