#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "bgl/loss.hpp"
#include "bgl/params.hpp"

namespace bgl {

// Output-layer wiring: plain softmax over fine labels only, one shared feature
// feeding every head, or two feature extractors (one for the fine head, one
// shared by all coarse heads).
enum class Mode { SM, BGL1, BGLM };

enum class ExtractorKind { Identity, Affine, Mlp };

const char* mode_name(Mode mode);
Mode parse_mode(const std::string& name);
const char* extractor_kind_name(ExtractorKind kind);
ExtractorKind parse_extractor_kind(const std::string& name);

// Vector-in, vector-out feature map standing in for a backbone network:
// identity, a single affine layer, or affine -> max(0,.) -> affine.
struct FeatureExtractor {
  ExtractorKind kind = ExtractorKind::Identity;
  int in_dim = 0;
  int out_dim = 0;
  Eigen::MatrixXd A1;  // affine/mlp first layer, (out|hidden) x in
  Eigen::VectorXd b1;
  Eigen::MatrixXd A2;  // mlp second layer, out x hidden
  Eigen::VectorXd b2;
};

Eigen::VectorXd extract(const FeatureExtractor& ext, const Eigen::VectorXd& x);

struct ExtractorGrads {
  Eigen::MatrixXd A1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd A2;
  Eigen::VectorXd b2;
};

struct ModelConfig {
  Mode mode = Mode::SM;
  ExtractorKind fine_kind = ExtractorKind::Identity;
  ExtractorKind coarse_kind = ExtractorKind::Identity;  // BGLM's second net
  int input_dim = 0;
  int feature_dim = 0;         // 0 resolves to input_dim
  int coarse_feature_dim = 0;  // BGLM only; 0 resolves to feature_dim
  int hidden_dim = 0;          // mlp extractors; 0 resolves to the output dim
  LossConfig loss;
};

struct Model {
  ModelConfig config;  // dims fully resolved
  LabelGraph graph;    // SM carries the m=0 graph regardless of the data's graph
  FeatureExtractor fine_extractor;
  FeatureExtractor coarse_extractor;  // meaningful in BGLM only
  ParamSet params;
  bool prior_enabled = false;
};

// Builds and initializes a model. Matrix entries are sampled uniformly from
// +-sqrt(6 / (fan_in + fan_out)), biases start at zero; draws are consumed in
// parameter declaration order, so init is deterministic per rng state. In BGLM
// with coarse feature dim != fine feature dim the coupling prior cannot apply
// and is disabled with a warning on stderr.
Model make_model(const ModelConfig& config, const LabelGraph& graph, std::mt19937_64& rng);

// Raw scores for one input: f = W^T feat(x), f_coarse[j] = W_coarse[j]^T feat'(x).
ScoreSet score(const Model& model, const Eigen::VectorXd& x);

struct ModelGrads {
  ParamSet params;
  ExtractorGrads fine;
  ExtractorGrads coarse;
};

ModelGrads zero_grads(const Model& model);

// Per-sample loss (nll data term, plus the coupling prior when enabled and
// lambda > 0); gradients of the same minimized quantity are ADDED into acc.
double backprop(const Model& model, const Eigen::VectorXd& x, int y, ModelGrads& acc);

// Flat views over every parameter (or gradient) matrix, in declaration order:
// W, W_coarse[0..m), fine extractor blocks, coarse extractor blocks.
struct BlockRef {
  std::string name;
  double* data = nullptr;
  int rows = 0;
  int cols = 0;

  long size() const { return static_cast<long>(rows) * cols; }
};

std::vector<BlockRef> param_blocks(Model& model);
std::vector<BlockRef> grad_blocks(const Model& model, ModelGrads& grads);

std::vector<double> flatten(Model& model);
void unflatten(Model& model, const std::vector<double>& flat);

// Self-describing binary checkpoint: magic "BGLM", version, mode/extractor
// tags, dims, the model's graph, then row-major little-endian f64 blocks in
// declaration order.
void save_checkpoint(const Model& model, std::ostream& out);
void save_checkpoint_file(const Model& model, const std::string& path);
Model load_checkpoint(std::istream& in);
Model load_checkpoint_file(const std::string& path);

}  // namespace bgl
