#pragma once

// parallel_for: OpenMP loop over [0, n) with the globally configured thread
// count. Bodies must write disjoint state per index so results are identical
// for any thread count.

#include <omp.h>

#include "orientrace/common.hpp"

namespace orientrace {

template <class F>
void parallel_for(int n, F&& body) {
  const int t = thread_count();
  if (t == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(t > 0 ? t : omp_get_max_threads())
  for (int i = 0; i < n; ++i) body(i);
}

}  // namespace orientrace
