#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bgl/label_graph.hpp"

namespace bgl {

// Weight blocks of the structured output layer: one fine head and one head per
// coarse type. Columns are per-class weight vectors. Also used as the container
// for shape-matched gradients.
struct ParamSet {
  Eigen::MatrixXd W;                      // d x k
  std::vector<Eigen::MatrixXd> W_coarse;  // m entries, d_j x k_j

  int d() const { return static_cast<int>(W.rows()); }
};

// Shape checks against the graph (column counts). Throws ShapeMismatch.
void check_params(const LabelGraph& g, const ParamSet& params);

// Zero-valued ParamSet with the same block shapes.
ParamSet zeros_like(const ParamSet& params);

}  // namespace bgl
