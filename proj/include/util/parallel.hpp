#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace util {

// Parallel loop over independent items. Each index is processed exactly once;
// results must be written to disjoint slots so the outcome is identical to the
// serial loop regardless of thread count.
template <typename Fn>
void parallel_for(int64_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
    for (int64_t i = 0; i < n; ++i) fn(i);
#else
    for (int64_t i = 0; i < n; ++i) fn(i);
#endif
}

inline int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace util
