#pragma once

#include <random>

#include "bgl/loss.hpp"

namespace bgl {

// Random valid graphs for property tests: k in [1, max_k], m in [0, max_m],
// k_j in [1, max_kj], parents uniform. Roughly every tenth draw deliberately
// leaves one coarse label without members, so empty groups stay covered.
LabelGraph random_graph(std::mt19937_64& rng, int max_k = 8, int max_m = 4, int max_kj = 4);

// Scores ~ N(0, stddev^2), shape-matched to the graph.
ScoreSet random_scores(std::mt19937_64& rng, const LabelGraph& g, double stddev = 2.0);

}  // namespace bgl
