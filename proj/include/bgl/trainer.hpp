#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bgl/model.hpp"
#include "bgl/synth.hpp"

namespace bgl {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 0.1;
  double lr_decay = 0.97;      // multiplicative per epoch
  double weight_decay = 1e-4;  // plain l2 shrinkage, separate from the coupling prior
  unsigned long long rng_seed = 1;
  int eval_every = 1;          // epochs between metric refreshes (rows in between repeat)
  std::string checkpoint_path; // empty = no checkpoint written
  int workers = 1;             // per-batch gradient chunks; 0 = all hardware threads
};

struct EpochRow {
  int epoch = 0;
  double loss = 0.0;  // mean per-sample training loss over the epoch
  double fine_acc = 0.0;
  std::vector<double> coarse_acc;  // one entry per coarse type of the eval graph
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRow> rows;
  int coarse_types = 0;
  bool diverged = false;  // a non-finite loss aborted the run after these rows
};

struct EvalResult {
  double fine_acc = 0.0;
  std::vector<double> coarse_acc;
};

// Top-1 accuracies. Fine prediction is the argmax of the model's fine
// marginals; coarse predictions are argmaxes of the marginals group-summed
// over the DATASET's graph, so coarse metrics exist even for a plain-softmax
// model. Ground-truth coarse labels come from the same graph.
EvalResult evaluate(const Model& model, const Dataset& data);

// Mini-batch SGD: theta <- theta - lr_e * (grad + weight_decay * theta) with
// lr_e = learning_rate * lr_decay^(epoch-1), batch gradient = mean of
// per-sample gradients. Deterministic per (config, seed): fixed shuffle
// sequence, and per-sample gradients reduced in a fixed chunk order for the
// configured worker count. Metrics are measured on eval_data. A non-finite
// batch loss aborts the run with diverged=true and no parameter update from
// that batch; the final model is checkpointed only on clean completion.
TrainReport train(Model& model, const Dataset& train_data, const Dataset& eval_data,
                  const TrainConfig& cfg);

// CSV: epoch,loss,fine_acc,coarse_acc_1,...,coarse_acc_m,seconds
void write_report_csv(const TrainReport& report, std::ostream& out);
void write_report_csv_file(const TrainReport& report, const std::string& path);

// Frozen training recipe for the synthetic benchmark comparisons.
TrainConfig benchmark_train_config();

}  // namespace bgl
