#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lpo {

// Global worker count, set once by the CLI (--workers). 1 keeps everything
// serial; kernels stay bit-identical across worker counts because each index
// writes its own slot and reductions happen in a fixed serial order.
int parallel_workers();
void set_parallel_workers(int n);

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
#ifdef _OPENMP
    const int workers = parallel_workers();
    if (workers > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(workers)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            fn(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

// Serial reference loop, kept distinct so tests and the kernel benchmark can
// compare it against the parallel path.
template <typename Fn>
void serial_for(std::size_t n, Fn&& fn) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

} // namespace lpo
