#pragma once

#include <iosfwd>
#include <string>

#include "bgl/params.hpp"

namespace bgl {

// Recipe for a planted-hierarchy classification dataset: coarse "theme"
// centers, fine class centers built from the sum of their parents' themes
// plus a class-specific offset, and Gaussian samples around each fine center.
struct SynthSpec {
  int k = 64;
  std::vector<int> coarse_sizes{8, 8};
  int feature_dim = 32;
  int samples_per_class = 5;
  double within_fine_noise = 1.0;   // sample spread around the class center
  double coarse_center_scale = 1.0; // spread of the coarse theme centers
  double fine_offset_scale = 1.0;   // spread of the class-specific offsets
  unsigned long long rng_seed = 1;
  bool random_parents = false;      // default: balanced round-robin assignment

  int m() const { return static_cast<int>(coarse_sizes.size()); }
};

// Sample matrix (one column per sample), 0-based fine labels, and the graph
// the features were planted with.
struct Dataset {
  Eigen::MatrixXd features;  // d x n
  std::vector<int> labels;   // length n
  LabelGraph graph;

  int d() const { return static_cast<int>(features.rows()); }
  int n() const { return static_cast<int>(features.cols()); }
};

Dataset generate(const SynthSpec& spec);

// Balanced deterministic parent assignment: type j cycles through its coarse
// labels in blocks of prod_{l<j} k_l, so group sizes differ by at most one and
// no two types induce the same partition (until the strides wrap).
LabelGraph round_robin_graph(int k, const std::vector<int>& sizes);

// Text format: header `n=<int> d=<int> k=<int>`, then n lines of
// `<y> <x_1> ... <x_d>` with 1-based labels and %.17g features (lossless
// round trip). The graph is stored separately in the label-graph format;
// loading attaches the plain m=0 graph until attach_graph supplies one.
Dataset parse_dataset(const std::string& text);
Dataset load_dataset(std::istream& in);
Dataset load_dataset_file(const std::string& path);
std::string format_dataset(const Dataset& data);
void save_dataset(const Dataset& data, std::ostream& out);
void save_dataset_file(const Dataset& data, const std::string& path);

// Replaces the dataset's graph; the graph's k must cover every label.
void attach_graph(Dataset& data, const LabelGraph& g);

// Deterministic split: the first n_train samples of every fine class go to
// the first piece, the rest to the second.
std::pair<Dataset, Dataset> split_per_class(const Dataset& data, int n_train);

// The frozen benchmark recipe (constants calibrated once, then pinned):
// k=64 fine classes over two 8-way coarse types, d=32, 25 samples per class —
// 5 for training and 20 held out via split_per_class.
SynthSpec benchmark_spec();
constexpr int kBenchmarkTrainPerClass = 5;

}  // namespace bgl
