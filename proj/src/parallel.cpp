#include "entifilt/parallel.hpp"

#include <omp.h>

namespace entifilt {

namespace {
int requested_threads = 0;
}

void set_num_threads(int n) {
    requested_threads = n;
    if (n > 0) omp_set_num_threads(n);
}

int max_threads() {
    if (requested_threads > 0) return requested_threads;
    return omp_get_max_threads();
}

}  // namespace entifilt
