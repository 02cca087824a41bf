#include "ddfilt/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ddfilt {
namespace {
std::atomic<int> g_override{0};
}

int thread_count() {
#ifdef _OPENMP
    if (const int forced = g_override.load(); forced > 0) return forced;
    if (const char* env = std::getenv("DDFILT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_thread_count(int threads) { g_override.store(threads > 0 ? threads : 0); }

}  // namespace ddfilt
