#pragma once

namespace ddfilt {

// Worker count for OpenMP kernels: DDFILT_THREADS if set to a positive
// integer, otherwise the OpenMP default. Always 1 in builds without OpenMP.
int thread_count();

// Overrides the worker count for the rest of the process (0 restores the
// environment/default behavior).
void set_thread_count(int threads);

}  // namespace ddfilt
