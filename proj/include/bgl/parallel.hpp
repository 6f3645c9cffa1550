#pragma once

#include <functional>

namespace bgl {

// Resolves a worker-count request: values >= 1 pass through, 0 means "all
// hardware threads" (1 when built without OpenMP).
int effective_workers(int requested);

// Number of chunks for_each_chunk(n, workers, ...) will produce; every chunk
// index passed to the body is < chunk_count(n, workers).
int chunk_count(int n, int workers);

// Splits [0, n) into min(workers, n) contiguous chunks and runs
// body(begin, end, chunk_index) for each, in parallel when OpenMP is enabled.
// Chunk boundaries depend only on n and the worker count, and each chunk runs
// its range in order — so per-chunk partial results merged in chunk order give
// a deterministic reduction for a fixed worker count.
void for_each_chunk(int n, int workers, const std::function<void(int, int, int)>& body);

}  // namespace bgl
