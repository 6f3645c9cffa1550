#include "bgl/random_instances.hpp"

namespace bgl {

LabelGraph random_graph(std::mt19937_64& rng, int max_k, int max_m, int max_kj) {
  LabelGraph g;
  g.k = std::uniform_int_distribution<int>(1, max_k)(rng);
  const int m = std::uniform_int_distribution<int>(0, max_m)(rng);
  g.coarse_sizes.resize(static_cast<size_t>(m));
  for (int& s : g.coarse_sizes) s = std::uniform_int_distribution<int>(1, max_kj)(rng);

  int hole_type = -1;
  int hole_label = -1;
  if (m > 0 && std::uniform_int_distribution<int>(0, 9)(rng) == 0) {
    hole_type = std::uniform_int_distribution<int>(0, m - 1)(rng);
    if (g.coarse_sizes[hole_type] >= 2) {
      hole_label = std::uniform_int_distribution<int>(0, g.coarse_sizes[hole_type] - 1)(rng);
    }
  }

  g.parent.resize(static_cast<size_t>(g.k) * static_cast<size_t>(m));
  for (int i = 0; i < g.k; ++i) {
    for (int j = 0; j < m; ++j) {
      const int kj = g.coarse_sizes[j];
      int p = std::uniform_int_distribution<int>(0, kj - 1)(rng);
      if (j == hole_type && hole_label >= 0 && p == hole_label) p = (p + 1) % kj;
      g.parent[static_cast<size_t>(i) * m + j] = p;
    }
  }
  validate(g);
  return g;
}

ScoreSet random_scores(std::mt19937_64& rng, const LabelGraph& g, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  ScoreSet s;
  s.fine.resize(static_cast<size_t>(g.k));
  for (double& v : s.fine) v = dist(rng);
  s.coarse.resize(static_cast<size_t>(g.m()));
  for (int j = 0; j < g.m(); ++j) {
    s.coarse[j].resize(static_cast<size_t>(g.coarse_sizes[j]));
    for (double& v : s.coarse[j]) v = dist(rng);
  }
  return s;
}

}  // namespace bgl
