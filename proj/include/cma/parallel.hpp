#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cma {

// Pointwise kernels write disjoint outputs, so results do not depend on the
// thread count. Reductions are always done serially after the loop.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn)
{
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i)
        fn(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < count; ++i)
        fn(i);
#endif
}

/// Applies the MA_THREADS environment override, if present. Returns the thread
/// count in effect.
inline int configure_threads_from_env()
{
#ifdef _OPENMP
    if (const char* env = std::getenv("MA_THREADS")) {
        int threads = std::atoi(env);
        if (threads > 0)
            omp_set_num_threads(threads);
    }
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace cma
