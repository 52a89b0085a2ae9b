#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qspec {

/// Number of worker threads for the data-parallel kernels. One worker runs the
/// plain serial loop, which is the reference path the OpenMP path is tested
/// against. Every kernel writes results into per-index slots, so output does
/// not depend on the worker count or on scheduling.
struct Exec {
  int workers = 1;

  bool serial() const noexcept {
#ifdef _OPENMP
    return workers <= 1 || omp_in_parallel();
#else
    return true;
#endif
  }
};

inline int available_workers() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Calls body(i) for i in [0, n). On the OpenMP path exceptions are captured
/// per index and the one with the smallest index is rethrown after the loop,
/// matching what the serial loop would have thrown first.
template <class Body>
void parallel_for(std::size_t n, Exec exec, Body&& body) {
  if (n == 0) return;
  if (exec.serial() || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for num_threads(exec.workers) schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace qspec
