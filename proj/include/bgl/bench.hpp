#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bgl/label_graph.hpp"

namespace bgl {

// Timing grid: the cross product of ks x ms x kjs (every coarse type of a
// configuration shares the same k_j). Each configuration times the structured
// forward, both backward passes, and a plain softmax forward/backward of the
// same k as the baseline.
struct BenchSpec {
  std::vector<int> ks{1000};
  std::vector<int> ms{3};
  std::vector<int> kjs{100};
  int reps = 25;    // timed repetitions per variant; the median is reported
  int warmup = 3;   // discarded calls before timing
  unsigned long long seed = 1;
  bool batch_variants = false;  // add serial-vs-parallel batch-gradient rows
  int workers = 0;              // parallel batch variant worker count; 0 = all
};

struct BenchRow {
  int k = 0;
  int m = 0;
  int kj = 0;
  std::string variant;
  double median_ns = 0.0;  // per call
};

std::vector<BenchRow> run_bench(const BenchSpec& spec);

// CSV: k,m,kj,variant,median_ns
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);
void write_bench_csv_file(const std::vector<BenchRow>& rows, const std::string& path);

}  // namespace bgl
