#pragma once

#include <cstddef>

namespace entifilt {

enum class ExecMode { serial, parallel };

// 0 restores the OpenMP runtime default.
void set_num_threads(int n);
int max_threads();

// Runs body(i) for i in [0, n). Every kernel built on this writes to disjoint
// output slots and draws randomness from per-index streams, so the two modes
// produce bit-identical results; the serial mode is the reference the tests
// compare against.
template <class F>
void parallel_for(std::size_t n, ExecMode mode, F&& body) {
    if (mode == ExecMode::serial) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        body(static_cast<std::size_t>(i));
}

}  // namespace entifilt
