#pragma once

#include "bgl/params.hpp"

namespace bgl {

// Hierarchical coupling penalty (lambda/2) * sum_i sum_j |w_i - w^j_{parent(i,j)}|^2.
// Requires every coarse block to share the fine head's feature dimension.
double prior_penalty(const LabelGraph& g, const ParamSet& params, double lambda);

// Gradient of prior_penalty with respect to every weight column, shaped like
// the input. Gradient of the minimized quantity: the trainer subtracts it.
ParamSet prior_gradient(const LabelGraph& g, const ParamSet& params, double lambda);

}  // namespace bgl
