#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "bgl/gradcheck.hpp"
#include "bgl/model.hpp"
#include "bgl/oracle.hpp"
#include "bgl/prior.hpp"
#include "bgl/random_instances.hpp"

using namespace bgl;

namespace {

LabelGraph tiny_graph() {
  LabelGraph g;
  g.k = 3;
  g.coarse_sizes = {2};
  g.parent = {0, 0, 1};
  return g;
}

double max_block_diff(Model& a, Model& b) {
  const std::vector<double> fa = flatten(a);
  const std::vector<double> fb = flatten(b);
  REQUIRE(fa.size() == fb.size());
  double worst = 0.0;
  for (size_t i = 0; i < fa.size(); ++i) worst = std::max(worst, std::abs(fa[i] - fb[i]));
  return worst;
}

}  // namespace

TEST_CASE("mode and extractor names round-trip") {
  for (Mode mode : {Mode::SM, Mode::BGL1, Mode::BGLM}) {
    CHECK(parse_mode(mode_name(mode)) == mode);
  }
  for (ExtractorKind kind : {ExtractorKind::Identity, ExtractorKind::Affine, ExtractorKind::Mlp}) {
    CHECK(parse_extractor_kind(extractor_kind_name(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_mode("bgl9"), Error);
  CHECK_THROWS_AS(parse_extractor_kind("conv"), Error);
}

TEST_CASE("identity weights score one-hot") {
  ModelConfig cfg;
  cfg.mode = Mode::SM;
  cfg.input_dim = 4;
  std::mt19937_64 rng(3);
  Model model = make_model(cfg, softmax_graph(4), rng);
  model.params.W = Eigen::MatrixXd::Identity(4, 4);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  x[2] = 1.0;
  const ScoreSet s = score(model, x);
  CHECK(s.coarse.empty());
  for (int i = 0; i < 4; ++i) CHECK(s.fine[i] == (i == 2 ? 1.0 : 0.0));
}

TEST_CASE("SM carries the softmax graph and no coarse heads") {
  ModelConfig cfg;
  cfg.mode = Mode::SM;
  cfg.input_dim = 5;
  std::mt19937_64 rng(5);
  const Model model = make_model(cfg, tiny_graph(), rng);
  CHECK(model.graph.m() == 0);
  CHECK(model.graph.k == 3);
  CHECK(model.params.W_coarse.empty());
  CHECK(!model.prior_enabled);
}

TEST_CASE("SM is bit-compatible with a zero-type BGL1 model") {
  ModelConfig sm;
  sm.mode = Mode::SM;
  sm.input_dim = 6;
  ModelConfig b1;
  b1.mode = Mode::BGL1;
  b1.input_dim = 6;

  std::mt19937_64 r1(9), r2(9);
  Model ma = make_model(sm, tiny_graph(), r1);
  Model mb = make_model(b1, softmax_graph(3), r2);
  CHECK(max_block_diff(ma, mb) < 1e-14);

  std::mt19937_64 rx(11);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd x(6);
  for (int i = 0; i < 6; ++i) x[i] = dist(rx);

  const ScoreSet sa = score(ma, x);
  const ScoreSet sb = score(mb, x);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(sa.fine[i] - sb.fine[i]) < 1e-14);

  ModelGrads ga = zero_grads(ma), gb = zero_grads(mb);
  const double la = backprop(ma, x, 1, ga);
  const double lb = backprop(mb, x, 1, gb);
  CHECK(std::abs(la - lb) < 1e-14);
  CHECK((ga.params.W - gb.params.W).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("initialization respects the fan-in/fan-out envelope") {
  ModelConfig cfg;
  cfg.mode = Mode::BGL1;
  cfg.fine_kind = ExtractorKind::Affine;
  cfg.input_dim = 6;
  cfg.feature_dim = 4;
  std::mt19937_64 rng(13);
  const Model model = make_model(cfg, tiny_graph(), rng);

  const double w_bound = std::sqrt(6.0 / (4 + 3));
  CHECK(model.params.W.cwiseAbs().maxCoeff() <= w_bound);
  CHECK(model.params.W.cwiseAbs().maxCoeff() > 0.0);
  const double a1_bound = std::sqrt(6.0 / (6 + 4));
  CHECK(model.fine_extractor.A1.cwiseAbs().maxCoeff() <= a1_bound);
  CHECK(model.fine_extractor.b1.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("make_model is deterministic per rng state") {
  ModelConfig cfg;
  cfg.mode = Mode::BGLM;
  cfg.fine_kind = ExtractorKind::Mlp;
  cfg.coarse_kind = ExtractorKind::Affine;
  cfg.input_dim = 5;
  cfg.feature_dim = 4;
  cfg.hidden_dim = 7;
  std::mt19937_64 r1(21), r2(21);
  Model a = make_model(cfg, tiny_graph(), r1);
  Model b = make_model(cfg, tiny_graph(), r2);
  CHECK(max_block_diff(a, b) == 0.0);
}

TEST_CASE("identity kinds require matching dims") {
  ModelConfig cfg;
  cfg.mode = Mode::BGL1;
  cfg.fine_kind = ExtractorKind::Identity;
  cfg.input_dim = 5;
  cfg.feature_dim = 4;  // identity cannot reshape
  std::mt19937_64 rng(23);
  CHECK_THROWS_AS(make_model(cfg, tiny_graph(), rng), Error);
}

TEST_CASE("BGLM disables the coupling prior when feature dims differ") {
  ModelConfig cfg;
  cfg.mode = Mode::BGLM;
  cfg.fine_kind = ExtractorKind::Affine;
  cfg.coarse_kind = ExtractorKind::Affine;
  cfg.input_dim = 6;
  cfg.feature_dim = 4;
  cfg.coarse_feature_dim = 3;
  cfg.loss.lambda = 0.5;
  std::mt19937_64 rng(27);
  const Model split = make_model(cfg, tiny_graph(), rng);
  CHECK(!split.prior_enabled);

  cfg.coarse_feature_dim = 4;
  const Model shared = make_model(cfg, tiny_graph(), rng);
  CHECK(shared.prior_enabled);
}

TEST_CASE("backprop is the expected outer product for identity BGL1") {
  ModelConfig cfg;
  cfg.mode = Mode::BGL1;
  cfg.input_dim = 3;
  cfg.loss.lambda = 0.0;
  std::mt19937_64 rng(31);
  Model model = make_model(cfg, tiny_graph(), rng);

  Eigen::VectorXd x(3);
  x << 0.3, -1.2, 0.8;
  const int y = 2;

  ModelGrads acc = zero_grads(model);
  const double loss = backprop(model, x, y, acc);

  const ScoreSet s = score(model, x);
  const Posterior post = forward(model.graph, s);
  CHECK(loss == doctest::Approx(nll_from(model.graph, post, y, cfg.loss)).epsilon(1e-13));

  const ScoreGradient ds = backward_fast(model.graph, post, y, cfg.loss);
  for (int i = 0; i < 3; ++i) {
    CHECK((acc.params.W.col(i) - ds.fine[i] * x).cwiseAbs().maxCoeff() < 1e-12);
  }
  for (int c = 0; c < 2; ++c) {
    CHECK((acc.params.W_coarse[0].col(c) - ds.coarse[0][c] * x).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("backprop accumulates into the provided gradient") {
  ModelConfig cfg;
  cfg.mode = Mode::BGL1;
  cfg.input_dim = 3;
  std::mt19937_64 rng(37);
  Model model = make_model(cfg, tiny_graph(), rng);
  Eigen::VectorXd x(3);
  x << 1.0, 0.5, -0.5;

  ModelGrads once = zero_grads(model);
  backprop(model, x, 0, once);
  ModelGrads twice = zero_grads(model);
  backprop(model, x, 0, twice);
  backprop(model, x, 0, twice);
  CHECK((twice.params.W - 2.0 * once.params.W).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("backprop includes the prior exactly when enabled") {
  ModelConfig cfg;
  cfg.mode = Mode::BGL1;
  cfg.input_dim = 3;
  cfg.loss.lambda = 0.7;
  std::mt19937_64 rng(41);
  Model model = make_model(cfg, tiny_graph(), rng);
  Eigen::VectorXd x(3);
  x << -0.4, 0.9, 0.1;

  ModelGrads acc = zero_grads(model);
  const double loss = backprop(model, x, 1, acc);
  const ScoreSet s = score(model, x);
  const double data = nll_from(model.graph, forward(model.graph, s), 1, cfg.loss);
  const double prior = prior_penalty(model.graph, model.params, cfg.loss.lambda);
  CHECK(prior > 0.0);
  CHECK(loss == doctest::Approx(data + prior).epsilon(1e-13));
}

TEST_CASE("SM backprop is softmax regression") {
  ModelConfig cfg;
  cfg.mode = Mode::SM;
  cfg.input_dim = 4;
  std::mt19937_64 rng(43);
  Model model = make_model(cfg, softmax_graph(4), rng);
  Eigen::VectorXd x(4);
  x << 0.2, -0.7, 1.1, 0.4;
  const int y = 3;

  ModelGrads acc = zero_grads(model);
  backprop(model, x, y, acc);

  const ScoreSet s = score(model, x);
  const std::vector<double> ref = oracle::softmax_grad_ref(s.fine, y);
  for (int i = 0; i < 4; ++i) {
    CHECK((acc.params.W.col(i) - ref[i] * x).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("end-to-end gradients match finite differences in every mode") {
  std::mt19937_64 rng(47);
  const LabelGraph g = tiny_graph();

  ModelConfig cfg;
  cfg.input_dim = 5;
  cfg.loss.lambda = 0.3;

  cfg.mode = Mode::SM;
  cfg.fine_kind = ExtractorKind::Mlp;
  cfg.feature_dim = 4;
  cfg.hidden_dim = 6;
  CHECK(gradcheck_model(g, cfg, rng, 1e-5) < 1e-5);

  cfg.mode = Mode::BGL1;
  cfg.fine_kind = ExtractorKind::Affine;
  cfg.hidden_dim = 0;
  CHECK(gradcheck_model(g, cfg, rng, 1e-5) < 1e-5);

  cfg.fine_kind = ExtractorKind::Mlp;
  cfg.hidden_dim = 6;
  CHECK(gradcheck_model(g, cfg, rng, 1e-5) < 1e-5);

  cfg.mode = Mode::BGLM;
  cfg.coarse_kind = ExtractorKind::Affine;
  CHECK(gradcheck_model(g, cfg, rng, 1e-5) < 1e-5);

  cfg.coarse_feature_dim = 3;  // prior off in this shape
  CHECK(gradcheck_model(g, cfg, rng, 1e-5) < 1e-5);
}

TEST_CASE("score validates the input dimension") {
  ModelConfig cfg;
  cfg.mode = Mode::SM;
  cfg.input_dim = 4;
  std::mt19937_64 rng(53);
  const Model model = make_model(cfg, softmax_graph(2), rng);
  CHECK_THROWS_AS(score(model, Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("checkpoint stream round trip preserves everything") {
  ModelConfig cfg;
  cfg.mode = Mode::BGLM;
  cfg.fine_kind = ExtractorKind::Mlp;
  cfg.coarse_kind = ExtractorKind::Affine;
  cfg.input_dim = 5;
  cfg.feature_dim = 4;
  cfg.coarse_feature_dim = 4;
  cfg.hidden_dim = 6;
  std::mt19937_64 rng(59);
  Model model = make_model(cfg, tiny_graph(), rng);

  std::stringstream ss;
  save_checkpoint(model, ss);
  Model back = load_checkpoint(ss);

  CHECK(back.config.mode == model.config.mode);
  CHECK(back.config.fine_kind == model.config.fine_kind);
  CHECK(back.config.coarse_kind == model.config.coarse_kind);
  CHECK(back.config.input_dim == model.config.input_dim);
  CHECK(back.config.feature_dim == model.config.feature_dim);
  CHECK(back.config.coarse_feature_dim == model.config.coarse_feature_dim);
  CHECK(back.config.hidden_dim == model.config.hidden_dim);
  CHECK(back.graph == model.graph);
  CHECK(back.prior_enabled == model.prior_enabled);
  CHECK(max_block_diff(model, back) == 0.0);

  // identical bytes on re-save: the format has no hidden state
  std::stringstream again;
  save_checkpoint(back, again);
  CHECK(again.str() == ss.str());
}

TEST_CASE("checkpoint file round trip") {
  ModelConfig cfg;
  cfg.mode = Mode::BGL1;
  cfg.input_dim = 3;
  std::mt19937_64 rng(61);
  Model model = make_model(cfg, tiny_graph(), rng);

  const std::string path = "ckpt_roundtrip.bin";
  save_checkpoint_file(model, path);
  Model back = load_checkpoint_file(path);
  CHECK(max_block_diff(model, back) == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects junk") {
  std::stringstream junk("definitely not a checkpoint");
  try {
    load_checkpoint(junk);
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IoError);
  }

  ModelConfig cfg;
  cfg.mode = Mode::BGL1;
  cfg.input_dim = 3;
  std::mt19937_64 rng(67);
  Model model = make_model(cfg, tiny_graph(), rng);
  std::stringstream full;
  save_checkpoint(model, full);
  const std::string bytes = full.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(truncated), Error);
}

TEST_CASE("flatten/unflatten is an exact inverse") {
  ModelConfig cfg;
  cfg.mode = Mode::BGLM;
  cfg.fine_kind = ExtractorKind::Affine;
  cfg.coarse_kind = ExtractorKind::Mlp;
  cfg.input_dim = 4;
  cfg.feature_dim = 3;
  cfg.coarse_feature_dim = 3;
  cfg.hidden_dim = 5;
  std::mt19937_64 rng(71);
  Model model = make_model(cfg, tiny_graph(), rng);

  std::vector<double> flat = flatten(model);
  std::vector<double> tweaked = flat;
  for (double& v : tweaked) v += 0.25;
  unflatten(model, tweaked);
  CHECK(flatten(model) == tweaked);
  unflatten(model, flat);
  CHECK(flatten(model) == flat);
}
