#pragma once

#include <random>

#include "bgl/model.hpp"

namespace bgl {

// Relative disagreement with a unit floor: |a - b| / max(1, |a|, |b|).
double rel_error(double a, double b);

// Each check draws a random instance, compares the analytic gradient against
// central finite differences of the corresponding scalar function, and returns
// the worst per-coordinate rel_error.

// Data-term gradient w.r.t. all scores at a random point; `sabotage` corrupts
// one analytic coordinate and must make the check fail (negative control).
double gradcheck_nll(const LabelGraph& g, std::mt19937_64& rng, double step,
                     bool sabotage = false, const LossConfig& cfg = {});

// prior_penalty gradient w.r.t. all weight columns at random weights.
double gradcheck_prior(const LabelGraph& g, std::mt19937_64& rng, double step);

// End-to-end loss gradient w.r.t. every parameter block of a freshly
// initialized model of the given architecture.
double gradcheck_model(const LabelGraph& g, const ModelConfig& cfg, std::mt19937_64& rng,
                       double step);

struct GradcheckOptions {
  int instances = 50;
  double step = 1e-5;
  double tolerance = 1e-4;
  unsigned long long seed = 1;
  bool sabotage = false;
};

struct GradcheckReport {
  double nll_max_rel = 0.0;
  double prior_max_rel = 0.0;
  double model_max_rel = 0.0;
  bool pass = false;
};

// Runs all three checks against one graph; model architectures cycle through
// the three modes and extractor kinds.
GradcheckReport run_gradcheck(const LabelGraph& g, const GradcheckOptions& opt);

}  // namespace bgl
