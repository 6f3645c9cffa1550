#pragma once

#include <vector>

#include "bgl/label_graph.hpp"

namespace bgl {

// Raw scores for one sample: k fine scores plus one vector per coarse type.
struct ScoreSet {
  std::vector<double> fine;                   // length k
  std::vector<std::vector<double>> coarse;    // coarse[j] has length k_j
};

// Exact joint posterior of the structured softmax: fine marginals p, coarse
// marginals p_coarse (group sums of p, by construction), log-partition, and
// the unnormalized joint log-scores log_h[i] = f_i + sum_j f^j_{parent(i,j)}.
struct Posterior {
  double log_z = 0.0;
  std::vector<double> p;
  std::vector<std::vector<double>> p_coarse;
  std::vector<double> log_h;
};

// Gradient of the minimized objective w.r.t. the raw scores; shape-matched to
// ScoreSet. Every vector sums to zero.
struct ScoreGradient {
  std::vector<double> fine;
  std::vector<std::vector<double>> coarse;
};

struct LossConfig {
  double lambda = 1e-4;                    // weight-coupling prior strength
  std::vector<double> coarse_term_weights; // empty = all 1.0

  double term_weight(int j) const {
    return coarse_term_weights.empty() ? 1.0 : coarse_term_weights[static_cast<size_t>(j)];
  }
};

// Throws InvalidSpec when cfg has negative entries or a weight list whose
// length does not match the graph.
void check_loss_config(const LabelGraph& g, const LossConfig& cfg);

double logsumexp(const std::vector<double>& args);

// Exact inference. O(km) plus one exp pass over the k joint scores.
Posterior forward(const LabelGraph& g, const ScoreSet& s);
void forward_into(const LabelGraph& g, const ScoreSet& s, Posterior& out);

// Joint negative log-likelihood data term,
//   -log p_y - sum_j w_j log p^j_{parent(y,j)},
// computed in the log domain (group log-sum-exp, never a quotient of small
// marginals). Returns +inf instead of NaN if a marginal term degenerates.
double nll(const LabelGraph& g, const ScoreSet& s, int y, const LossConfig& cfg = {});
double nll_from(const LabelGraph& g, const Posterior& post, int y, const LossConfig& cfg = {});

// Gradient of the nll data term w.r.t. all scores, by direct transliteration
// of the closed-form marginal derivatives; the cross-type part loops over all
// k fine classes for every (type, coarse) pair. Reference path for tests and
// the benchmark baseline.
ScoreGradient backward_naive(const LabelGraph& g, const Posterior& post, int y,
                             const LossConfig& cfg = {});

// Same output as backward_naive within 1e-12, but the cross-type aggregation
// uses per-fine-class accumulators q_i, dropping its cost from
// O(km * sum_j k_j) to O(km + sum_j k_j).
ScoreGradient backward_fast(const LabelGraph& g, const Posterior& post, int y,
                            const LossConfig& cfg = {});
void backward_fast_into(const LabelGraph& g, const Posterior& post, int y, const LossConfig& cfg,
                        ScoreGradient& out);

}  // namespace bgl
