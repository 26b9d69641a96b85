#pragma once

#include <cstddef>

#ifdef EPCORE_HAVE_OPENMP
#include <omp.h>
#endif

namespace epcore {

enum class ExecPolicy { serial, openmp };

inline int max_workers() {
#ifdef EPCORE_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_workers(int n) {
#ifdef EPCORE_HAVE_OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

/// Runs fn(i) for i in [0, n). Iterations must be independent and write
/// only to their own output slots, so results are identical for both
/// policies and any worker count.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, const Fn& fn,
                  ExecPolicy policy = ExecPolicy::openmp) {
#ifdef EPCORE_HAVE_OPENMP
    if (policy == ExecPolicy::openmp) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
        return;
    }
#else
    (void)policy;
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

} // namespace epcore
