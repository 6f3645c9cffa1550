#include "bgl/model.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iostream>

#include "bgl/prior.hpp"

namespace bgl {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

constexpr char kMagic[4] = {'B', 'G', 'L', 'M'};
constexpr uint32_t kVersion = 1;

void glorot_fill(std::mt19937_64& rng, Eigen::MatrixXd& mat, int fan_in, int fan_out) {
  const double r = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-r, r);
  for (long idx = 0; idx < mat.size(); ++idx) mat.data()[idx] = dist(rng);
}

FeatureExtractor make_extractor_shell(ExtractorKind kind, int in_dim, int out_dim,
                                      int hidden_dim) {
  FeatureExtractor ext;
  ext.kind = kind;
  ext.in_dim = in_dim;
  ext.out_dim = out_dim;
  switch (kind) {
    case ExtractorKind::Identity:
      break;
    case ExtractorKind::Affine:
      ext.A1 = Eigen::MatrixXd::Zero(out_dim, in_dim);
      ext.b1 = Eigen::VectorXd::Zero(out_dim);
      break;
    case ExtractorKind::Mlp:
      ext.A1 = Eigen::MatrixXd::Zero(hidden_dim, in_dim);
      ext.b1 = Eigen::VectorXd::Zero(hidden_dim);
      ext.A2 = Eigen::MatrixXd::Zero(out_dim, hidden_dim);
      ext.b2 = Eigen::VectorXd::Zero(out_dim);
      break;
  }
  return ext;
}

void init_extractor(std::mt19937_64& rng, FeatureExtractor& ext) {
  switch (ext.kind) {
    case ExtractorKind::Identity:
      break;
    case ExtractorKind::Affine:
      glorot_fill(rng, ext.A1, ext.in_dim, ext.out_dim);
      break;
    case ExtractorKind::Mlp: {
      const int hidden = static_cast<int>(ext.A1.rows());
      glorot_fill(rng, ext.A1, ext.in_dim, hidden);
      glorot_fill(rng, ext.A2, hidden, ext.out_dim);
      break;
    }
  }
}

ModelConfig resolve_config(ModelConfig cfg, const LabelGraph& graph) {
  if (cfg.input_dim < 1) fail(Errc::InvalidSpec, "input_dim must be >= 1");
  if (cfg.feature_dim == 0) cfg.feature_dim = cfg.input_dim;
  if (cfg.feature_dim < 1) fail(Errc::InvalidSpec, "feature_dim must be >= 1");
  if (cfg.mode == Mode::BGLM) {
    if (cfg.coarse_feature_dim == 0) cfg.coarse_feature_dim = cfg.feature_dim;
    if (cfg.coarse_feature_dim < 1) fail(Errc::InvalidSpec, "coarse_feature_dim must be >= 1");
  } else {
    cfg.coarse_feature_dim = cfg.feature_dim;
  }
  if (cfg.hidden_dim == 0) cfg.hidden_dim = cfg.feature_dim;
  if (cfg.hidden_dim < 1) fail(Errc::InvalidSpec, "hidden_dim must be >= 1");

  if (cfg.fine_kind == ExtractorKind::Identity && cfg.feature_dim != cfg.input_dim) {
    fail(Errc::InvalidSpec, "identity extractor needs feature_dim == input_dim (got " +
                                std::to_string(cfg.feature_dim) + " vs " +
                                std::to_string(cfg.input_dim) + ")");
  }
  if (cfg.mode == Mode::BGLM && cfg.coarse_kind == ExtractorKind::Identity &&
      cfg.coarse_feature_dim != cfg.input_dim) {
    fail(Errc::InvalidSpec, "identity coarse extractor needs coarse_feature_dim == input_dim");
  }
  // SM ignores the graph's coarse structure entirely, so per-type term weights
  // have nothing to attach to.
  if (cfg.mode == Mode::SM) cfg.loss.coarse_term_weights.clear();
  (void)graph;
  return cfg;
}

// Allocates all blocks (zeroed) for a resolved config; no rng, no warnings.
Model build_shell(const ModelConfig& cfg, const LabelGraph& graph) {
  Model model;
  model.config = cfg;
  model.graph = cfg.mode == Mode::SM ? softmax_graph(graph.k) : graph;
  model.fine_extractor =
      make_extractor_shell(cfg.fine_kind, cfg.input_dim, cfg.feature_dim, cfg.hidden_dim);
  if (cfg.mode == Mode::BGLM) {
    model.coarse_extractor =
        make_extractor_shell(cfg.coarse_kind, cfg.input_dim, cfg.coarse_feature_dim,
                             cfg.hidden_dim);
  }
  model.params.W = Eigen::MatrixXd::Zero(cfg.feature_dim, graph.k);
  if (cfg.mode != Mode::SM) {
    const int head_dim = cfg.mode == Mode::BGLM ? cfg.coarse_feature_dim : cfg.feature_dim;
    model.params.W_coarse.reserve(static_cast<size_t>(graph.m()));
    for (int j = 0; j < graph.m(); ++j) {
      model.params.W_coarse.push_back(Eigen::MatrixXd::Zero(head_dim, graph.coarse_sizes[j]));
    }
  }
  model.prior_enabled =
      cfg.mode == Mode::BGL1 ||
      (cfg.mode == Mode::BGLM && cfg.coarse_feature_dim == cfg.feature_dim);
  check_loss_config(model.graph, model.config.loss);
  return model;
}

struct ExtractorState {
  Eigen::VectorXd pre1;    // mlp first-layer pre-activation
  Eigen::VectorXd hidden;  // mlp max(0, pre1)
  Eigen::VectorXd out;
};

ExtractorState run_extractor(const FeatureExtractor& ext, const Eigen::VectorXd& x) {
  ExtractorState st;
  switch (ext.kind) {
    case ExtractorKind::Identity:
      st.out = x;
      break;
    case ExtractorKind::Affine:
      st.out = ext.A1 * x + ext.b1;
      break;
    case ExtractorKind::Mlp:
      st.pre1 = ext.A1 * x + ext.b1;
      st.hidden = st.pre1.cwiseMax(0.0);
      st.out = ext.A2 * st.hidden + ext.b2;
      break;
  }
  return st;
}

void backprop_extractor(const FeatureExtractor& ext, const ExtractorState& st,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& dout,
                        ExtractorGrads& acc) {
  switch (ext.kind) {
    case ExtractorKind::Identity:
      break;
    case ExtractorKind::Affine:
      acc.A1 += dout * x.transpose();
      acc.b1 += dout;
      break;
    case ExtractorKind::Mlp: {
      acc.A2 += dout * st.hidden.transpose();
      acc.b2 += dout;
      Eigen::VectorXd dpre =
          (st.pre1.array() > 0.0).select(ext.A2.transpose() * dout, 0.0);
      acc.A1 += dpre * x.transpose();
      acc.b1 += dpre;
      break;
    }
  }
}

template <typename ExtractorLike>
void add_extractor_blocks(ExtractorKind kind, const std::string& prefix, ExtractorLike& ext,
                          std::vector<BlockRef>& out) {
  if (kind == ExtractorKind::Identity) return;
  out.push_back({prefix + ".A1", ext.A1.data(), static_cast<int>(ext.A1.rows()),
                 static_cast<int>(ext.A1.cols())});
  out.push_back({prefix + ".b1", ext.b1.data(), static_cast<int>(ext.b1.size()), 1});
  if (kind == ExtractorKind::Mlp) {
    out.push_back({prefix + ".A2", ext.A2.data(), static_cast<int>(ext.A2.rows()),
                   static_cast<int>(ext.A2.cols())});
    out.push_back({prefix + ".b2", ext.b2.data(), static_cast<int>(ext.b2.size()), 1});
  }
}

template <typename ParamsLike, typename FineLike, typename CoarseLike>
std::vector<BlockRef> blocks_of(const Model& model, ParamsLike& params, FineLike& fine,
                                CoarseLike& coarse) {
  std::vector<BlockRef> out;
  out.push_back({"W", params.W.data(), static_cast<int>(params.W.rows()),
                 static_cast<int>(params.W.cols())});
  for (size_t j = 0; j < params.W_coarse.size(); ++j) {
    auto& b = params.W_coarse[j];
    out.push_back({"W_coarse[" + std::to_string(j + 1) + "]", b.data(),
                   static_cast<int>(b.rows()), static_cast<int>(b.cols())});
  }
  add_extractor_blocks(model.config.fine_kind, "fine", fine, out);
  if (model.config.mode == Mode::BGLM) {
    add_extractor_blocks(model.config.coarse_kind, "coarse", coarse, out);
  }
  return out;
}

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(Errc::IoError, "truncated checkpoint");
  return v;
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::SM: return "sm";
    case Mode::BGL1: return "bgl1";
    case Mode::BGLM: return "bglm";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "sm") return Mode::SM;
  if (name == "bgl1") return Mode::BGL1;
  if (name == "bglm") return Mode::BGLM;
  fail(Errc::InvalidSpec, "unknown mode '" + name + "' (want sm, bgl1, or bglm)");
}

const char* extractor_kind_name(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::Identity: return "identity";
    case ExtractorKind::Affine: return "affine";
    case ExtractorKind::Mlp: return "mlp";
  }
  return "?";
}

ExtractorKind parse_extractor_kind(const std::string& name) {
  if (name == "identity") return ExtractorKind::Identity;
  if (name == "affine") return ExtractorKind::Affine;
  if (name == "mlp") return ExtractorKind::Mlp;
  fail(Errc::InvalidSpec, "unknown extractor '" + name + "' (want identity, affine, or mlp)");
}

Eigen::VectorXd extract(const FeatureExtractor& ext, const Eigen::VectorXd& x) {
  if (static_cast<int>(x.size()) != ext.in_dim) {
    fail(Errc::ShapeMismatch, "extractor input has " + std::to_string(x.size()) +
                                  " entries, want " + std::to_string(ext.in_dim));
  }
  return run_extractor(ext, x).out;
}

Model make_model(const ModelConfig& config, const LabelGraph& graph, std::mt19937_64& rng) {
  validate(graph);
  const ModelConfig cfg = resolve_config(config, graph);
  Model model = build_shell(cfg, graph);
  if (cfg.mode == Mode::BGLM && !model.prior_enabled && cfg.loss.lambda > 0.0) {
    std::cerr << "warning: weight-coupling prior disabled: coarse feature dim "
              << cfg.coarse_feature_dim << " != fine feature dim " << cfg.feature_dim << "\n";
  }
  glorot_fill(rng, model.params.W, cfg.feature_dim, model.graph.k);
  for (int j = 0; j < model.graph.m(); ++j) {
    glorot_fill(rng, model.params.W_coarse[j], static_cast<int>(model.params.W_coarse[j].rows()),
                model.graph.coarse_sizes[j]);
  }
  init_extractor(rng, model.fine_extractor);
  if (cfg.mode == Mode::BGLM) init_extractor(rng, model.coarse_extractor);
  return model;
}

ScoreSet score(const Model& model, const Eigen::VectorXd& x) {
  if (static_cast<int>(x.size()) != model.config.input_dim) {
    fail(Errc::ShapeMismatch, "input has " + std::to_string(x.size()) + " entries, model wants " +
                                  std::to_string(model.config.input_dim));
  }
  const Eigen::VectorXd feat = extract(model.fine_extractor, x);
  ScoreSet s;
  const Eigen::VectorXd f = model.params.W.transpose() * feat;
  s.fine.assign(f.data(), f.data() + f.size());
  if (model.config.mode != Mode::SM) {
    const Eigen::VectorXd featc =
        model.config.mode == Mode::BGLM ? extract(model.coarse_extractor, x) : feat;
    s.coarse.resize(model.params.W_coarse.size());
    for (size_t j = 0; j < model.params.W_coarse.size(); ++j) {
      const Eigen::VectorXd fj = model.params.W_coarse[j].transpose() * featc;
      s.coarse[j].assign(fj.data(), fj.data() + fj.size());
    }
  }
  return s;
}

ModelGrads zero_grads(const Model& model) {
  ModelGrads g;
  g.params = zeros_like(model.params);
  auto zero_ext = [](const FeatureExtractor& ext, ExtractorGrads& out) {
    out.A1 = Eigen::MatrixXd::Zero(ext.A1.rows(), ext.A1.cols());
    out.b1 = Eigen::VectorXd::Zero(ext.b1.size());
    out.A2 = Eigen::MatrixXd::Zero(ext.A2.rows(), ext.A2.cols());
    out.b2 = Eigen::VectorXd::Zero(ext.b2.size());
  };
  zero_ext(model.fine_extractor, g.fine);
  zero_ext(model.coarse_extractor, g.coarse);
  return g;
}

double backprop(const Model& model, const Eigen::VectorXd& x, int y, ModelGrads& acc) {
  if (static_cast<int>(x.size()) != model.config.input_dim) {
    fail(Errc::ShapeMismatch, "input has " + std::to_string(x.size()) + " entries, model wants " +
                                  std::to_string(model.config.input_dim));
  }
  const bool two_nets = model.config.mode == Mode::BGLM;
  const ExtractorState fs = run_extractor(model.fine_extractor, x);
  ExtractorState cs;
  if (two_nets) cs = run_extractor(model.coarse_extractor, x);
  const Eigen::VectorXd& feat = fs.out;
  const Eigen::VectorXd& featc = two_nets ? cs.out : fs.out;

  ScoreSet s;
  const Eigen::VectorXd f = model.params.W.transpose() * feat;
  s.fine.assign(f.data(), f.data() + f.size());
  s.coarse.resize(model.params.W_coarse.size());
  for (size_t j = 0; j < model.params.W_coarse.size(); ++j) {
    const Eigen::VectorXd fj = model.params.W_coarse[j].transpose() * featc;
    s.coarse[j].assign(fj.data(), fj.data() + fj.size());
  }

  const Posterior post = forward(model.graph, s);
  double loss = nll_from(model.graph, post, y, model.config.loss);
  const ScoreGradient ds = backward_fast(model.graph, post, y, model.config.loss);

  const Eigen::Map<const Eigen::VectorXd> df(ds.fine.data(), static_cast<long>(ds.fine.size()));
  acc.params.W += feat * df.transpose();
  Eigen::VectorXd dfeat = model.params.W * df;
  Eigen::VectorXd dfeatc = Eigen::VectorXd::Zero(featc.size());
  for (size_t j = 0; j < model.params.W_coarse.size(); ++j) {
    const Eigen::Map<const Eigen::VectorXd> dfj(ds.coarse[j].data(),
                                                static_cast<long>(ds.coarse[j].size()));
    acc.params.W_coarse[j] += featc * dfj.transpose();
    dfeatc += model.params.W_coarse[j] * dfj;
  }

  if (two_nets) {
    backprop_extractor(model.fine_extractor, fs, x, dfeat, acc.fine);
    backprop_extractor(model.coarse_extractor, cs, x, dfeatc, acc.coarse);
  } else {
    dfeat += dfeatc;
    backprop_extractor(model.fine_extractor, fs, x, dfeat, acc.fine);
  }

  if (model.prior_enabled && model.config.loss.lambda > 0.0) {
    loss += prior_penalty(model.graph, model.params, model.config.loss.lambda);
    const ParamSet pg = prior_gradient(model.graph, model.params, model.config.loss.lambda);
    acc.params.W += pg.W;
    for (size_t j = 0; j < pg.W_coarse.size(); ++j) acc.params.W_coarse[j] += pg.W_coarse[j];
  }
  return loss;
}

std::vector<BlockRef> param_blocks(Model& model) {
  return blocks_of(model, model.params, model.fine_extractor, model.coarse_extractor);
}

std::vector<BlockRef> grad_blocks(const Model& model, ModelGrads& grads) {
  return blocks_of(model, grads.params, grads.fine, grads.coarse);
}

std::vector<double> flatten(Model& model) {
  std::vector<double> flat;
  for (const BlockRef& b : param_blocks(model)) {
    flat.insert(flat.end(), b.data, b.data + b.size());
  }
  return flat;
}

void unflatten(Model& model, const std::vector<double>& flat) {
  size_t offset = 0;
  for (const BlockRef& b : param_blocks(model)) {
    if (offset + static_cast<size_t>(b.size()) > flat.size()) {
      fail(Errc::ShapeMismatch, "flat parameter vector too short");
    }
    std::copy(flat.begin() + static_cast<long>(offset),
              flat.begin() + static_cast<long>(offset) + b.size(), b.data);
    offset += static_cast<size_t>(b.size());
  }
  if (offset != flat.size()) fail(Errc::ShapeMismatch, "flat parameter vector too long");
}

void save_checkpoint(const Model& model, std::ostream& out) {
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(model.config.mode));
  write_u32(out, static_cast<uint32_t>(model.config.fine_kind));
  write_u32(out, static_cast<uint32_t>(model.config.coarse_kind));
  write_u32(out, static_cast<uint32_t>(model.config.input_dim));
  write_u32(out, static_cast<uint32_t>(model.config.feature_dim));
  write_u32(out, static_cast<uint32_t>(model.config.coarse_feature_dim));
  write_u32(out, static_cast<uint32_t>(model.config.hidden_dim));
  write_u32(out, static_cast<uint32_t>(model.graph.k));
  write_u32(out, static_cast<uint32_t>(model.graph.m()));
  for (int s : model.graph.coarse_sizes) write_u32(out, static_cast<uint32_t>(s));
  for (int p : model.graph.parent) write_u32(out, static_cast<uint32_t>(p));

  auto blocks = param_blocks(const_cast<Model&>(model));  // read-only traversal
  write_u32(out, static_cast<uint32_t>(blocks.size()));
  for (const BlockRef& b : blocks) {
    write_u32(out, static_cast<uint32_t>(b.rows));
    write_u32(out, static_cast<uint32_t>(b.cols));
    // column-major in memory, row-major on disk
    for (int r = 0; r < b.rows; ++r) {
      for (int c = 0; c < b.cols; ++c) {
        const double v = b.data[static_cast<long>(c) * b.rows + r];
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    }
  }
  if (!out) fail(Errc::IoError, "checkpoint write failed");
}

void save_checkpoint_file(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open '" + path + "' for writing");
  save_checkpoint(model, out);
}

Model load_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    fail(Errc::IoError, "not a model checkpoint (bad magic)");
  }
  const uint32_t version = read_u32(in);
  if (version != kVersion) {
    fail(Errc::IoError, "unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t mode_tag = read_u32(in);
  const uint32_t fine_tag = read_u32(in);
  const uint32_t coarse_tag = read_u32(in);
  if (mode_tag > 2 || fine_tag > 2 || coarse_tag > 2) {
    fail(Errc::IoError, "corrupt checkpoint header");
  }
  ModelConfig cfg;
  cfg.mode = static_cast<Mode>(mode_tag);
  cfg.fine_kind = static_cast<ExtractorKind>(fine_tag);
  cfg.coarse_kind = static_cast<ExtractorKind>(coarse_tag);
  cfg.input_dim = static_cast<int>(read_u32(in));
  cfg.feature_dim = static_cast<int>(read_u32(in));
  cfg.coarse_feature_dim = static_cast<int>(read_u32(in));
  cfg.hidden_dim = static_cast<int>(read_u32(in));

  LabelGraph g;
  g.k = static_cast<int>(read_u32(in));
  const int m = static_cast<int>(read_u32(in));
  g.coarse_sizes.resize(static_cast<size_t>(m));
  for (int& s : g.coarse_sizes) s = static_cast<int>(read_u32(in));
  g.parent.resize(static_cast<size_t>(g.k) * static_cast<size_t>(m));
  for (int& p : g.parent) p = static_cast<int>(read_u32(in));
  validate(g);

  Model model = build_shell(cfg, g);
  auto blocks = param_blocks(model);
  const uint32_t n_blocks = read_u32(in);
  if (n_blocks != blocks.size()) {
    fail(Errc::IoError, "checkpoint has " + std::to_string(n_blocks) + " blocks, model needs " +
                            std::to_string(blocks.size()));
  }
  for (const BlockRef& b : blocks) {
    const int rows = static_cast<int>(read_u32(in));
    const int cols = static_cast<int>(read_u32(in));
    if (rows != b.rows || cols != b.cols) {
      fail(Errc::IoError, "checkpoint block " + b.name + " is " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", model needs " + std::to_string(b.rows) +
                              "x" + std::to_string(b.cols));
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double v = 0.0;
        in.read(reinterpret_cast<char*>(&v), sizeof v);
        b.data[static_cast<long>(c) * rows + r] = v;
      }
    }
  }
  if (!in) fail(Errc::IoError, "truncated checkpoint");
  return model;
}

Model load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace bgl
