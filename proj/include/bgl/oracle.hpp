#pragma once

#include <functional>
#include <vector>

#include "bgl/loss.hpp"

// Brute-force reference implementations, deliberately transparent and slow.
// They share no code with the production paths so the two can check each other.
namespace bgl::oracle {

// One supported joint assignment (fine class + one coarse label per type).
struct JointState {
  int fine = 0;
  std::vector<int> coarse;
  double score = 0.0;  // unnormalized: e^{f_i} * prod_j e^{f^j_{c_j}} under the mask
};

// Exhaustive enumeration of the joint distribution.
struct JointTable {
  double z = 0.0;
  std::vector<JointState> states;  // only states with nonzero support
  std::vector<double> p;
  std::vector<std::vector<double>> p_coarse;
};

// Loops over every (i, c_1, ..., c_m) combination, applying the association
// mask. Guarded: k * prod_j k_j must not exceed 10^7.
JointTable enumerate_joint(const LabelGraph& g, const ScoreSet& s);

// Central finite differences (L(x + h e) - L(x - h e)) / (2h) per coordinate.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& loss_fn,
                                const std::vector<double>& point, double step);

// Plain softmax reference path, written independently of the structured loss.
std::vector<double> softmax_ref(const std::vector<double>& f);
double softmax_nll_ref(const std::vector<double>& f, int y);
// Gradient of the minimized cross-entropy: p - onehot(y).
std::vector<double> softmax_grad_ref(const std::vector<double>& f, int y);

}  // namespace bgl::oracle
