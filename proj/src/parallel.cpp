#include "bgl/parallel.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bgl {

int effective_workers(int requested) {
  if (requested >= 1) return requested;
#ifdef _OPENMP
  return std::max(1, omp_get_max_threads());
#else
  return 1;
#endif
}

int chunk_count(int n, int workers) {
  if (n <= 0) return 0;
  return std::min(effective_workers(workers), n);
}

void for_each_chunk(int n, int workers, const std::function<void(int, int, int)>& body) {
  if (n <= 0) return;
  const int w = chunk_count(n, workers);
  if (w <= 1) {
    body(0, n, 0);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(w)
#endif
  for (int c = 0; c < w; ++c) {
    const int begin = static_cast<int>(static_cast<long>(n) * c / w);
    const int end = static_cast<int>(static_cast<long>(n) * (c + 1) / w);
    body(begin, end, c);
  }
}

}  // namespace bgl
