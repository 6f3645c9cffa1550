#include "bgl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "bgl/oracle.hpp"
#include "bgl/prior.hpp"
#include "bgl/random_instances.hpp"

namespace bgl {

namespace {

ScoreSet unflatten_scores(const LabelGraph& g, const std::vector<double>& flat) {
  ScoreSet s;
  auto it = flat.begin();
  s.fine.assign(it, it + g.k);
  it += g.k;
  s.coarse.resize(static_cast<size_t>(g.m()));
  for (int j = 0; j < g.m(); ++j) {
    s.coarse[j].assign(it, it + g.coarse_sizes[j]);
    it += g.coarse_sizes[j];
  }
  return s;
}

std::vector<double> flatten_scores(const ScoreSet& s) {
  std::vector<double> flat(s.fine);
  for (const auto& fj : s.coarse) flat.insert(flat.end(), fj.begin(), fj.end());
  return flat;
}

std::vector<double> flatten_grad(const ScoreGradient& ds) {
  std::vector<double> flat(ds.fine);
  for (const auto& fj : ds.coarse) flat.insert(flat.end(), fj.begin(), fj.end());
  return flat;
}

ParamSet unflatten_params(const ParamSet& like, const std::vector<double>& flat) {
  ParamSet p = zeros_like(like);
  size_t off = 0;
  const auto fill = [&](Eigen::MatrixXd& mat) {
    std::copy(flat.begin() + static_cast<long>(off),
              flat.begin() + static_cast<long>(off) + mat.size(), mat.data());
    off += static_cast<size_t>(mat.size());
  };
  fill(p.W);
  for (auto& b : p.W_coarse) fill(b);
  return p;
}

std::vector<double> flatten_params(const ParamSet& p) {
  std::vector<double> flat(p.W.data(), p.W.data() + p.W.size());
  for (const auto& b : p.W_coarse) flat.insert(flat.end(), b.data(), b.data() + b.size());
  return flat;
}

double max_rel(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double worst = 0.0;
  for (size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, rel_error(analytic[i], numeric[i]));
  }
  return worst;
}

// Smallest |pre-activation| across the model's max(0,.) layers at input x;
// finite differences need this clear of the kink.
double min_kink_distance(const Model& model, const Eigen::VectorXd& x) {
  double dist = std::numeric_limits<double>::infinity();
  const auto probe = [&](const FeatureExtractor& ext) {
    if (ext.kind != ExtractorKind::Mlp) return;
    const Eigen::VectorXd pre = ext.A1 * x + ext.b1;
    dist = std::min(dist, pre.cwiseAbs().minCoeff());
  };
  probe(model.fine_extractor);
  if (model.config.mode == Mode::BGLM) probe(model.coarse_extractor);
  return dist;
}

double model_loss(const Model& model, const Eigen::VectorXd& x, int y) {
  const ScoreSet s = score(model, x);
  const Posterior post = forward(model.graph, s);
  double loss = nll_from(model.graph, post, y, model.config.loss);
  if (model.prior_enabled && model.config.loss.lambda > 0.0) {
    loss += prior_penalty(model.graph, model.params, model.config.loss.lambda);
  }
  return loss;
}

}  // namespace

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

double gradcheck_nll(const LabelGraph& g, std::mt19937_64& rng, double step, bool sabotage,
                     const LossConfig& cfg) {
  const ScoreSet s = random_scores(rng, g, 2.0);
  const int y = std::uniform_int_distribution<int>(0, g.k - 1)(rng);

  std::vector<double> analytic = flatten_grad(backward_fast(g, forward(g, s), y, cfg));
  if (sabotage) analytic[0] += 0.5;

  const std::vector<double> numeric = oracle::fd_gradient(
      [&](const std::vector<double>& flat) { return nll(g, unflatten_scores(g, flat), y, cfg); },
      flatten_scores(s), step);
  return max_rel(analytic, numeric);
}

double gradcheck_prior(const LabelGraph& g, std::mt19937_64& rng, double step) {
  const int d = 3;
  std::normal_distribution<double> dist(0.0, 1.0);
  ParamSet p;
  p.W = Eigen::MatrixXd::NullaryExpr(d, g.k, [&]() { return dist(rng); });
  for (int j = 0; j < g.m(); ++j) {
    p.W_coarse.push_back(
        Eigen::MatrixXd::NullaryExpr(d, g.coarse_sizes[j], [&]() { return dist(rng); }));
  }
  const double lambda = std::uniform_real_distribution<double>(0.1, 2.0)(rng);

  const std::vector<double> analytic = flatten_params(prior_gradient(g, p, lambda));
  const std::vector<double> numeric = oracle::fd_gradient(
      [&](const std::vector<double>& flat) {
        return prior_penalty(g, unflatten_params(p, flat), lambda);
      },
      flatten_params(p), step);
  return max_rel(analytic, numeric);
}

double gradcheck_model(const LabelGraph& g, const ModelConfig& cfg, std::mt19937_64& rng,
                       double step) {
  Model model = make_model(cfg, g, rng);

  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd x(model.config.input_dim);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (long i = 0; i < x.size(); ++i) x[i] = dist(rng);
    if (min_kink_distance(model, x) > 1e-3) break;
  }
  const int y = std::uniform_int_distribution<int>(0, g.k - 1)(rng);

  ModelGrads grads = zero_grads(model);
  backprop(model, x, y, grads);
  std::vector<double> analytic;
  for (const BlockRef& b : grad_blocks(model, grads)) {
    analytic.insert(analytic.end(), b.data, b.data + b.size());
  }

  const std::vector<double> numeric = oracle::fd_gradient(
      [&](const std::vector<double>& flat) {
        unflatten(model, flat);
        return model_loss(model, x, y);
      },
      flatten(model), step);
  return max_rel(analytic, numeric);
}

GradcheckReport run_gradcheck(const LabelGraph& g, const GradcheckOptions& opt) {
  if (opt.instances < 1) fail(Errc::InvalidSpec, "gradcheck needs at least one instance");
  if (!(opt.step > 0.0)) fail(Errc::InvalidSpec, "gradcheck step must be > 0");
  std::mt19937_64 rng(opt.seed);

  GradcheckReport report;
  for (int it = 0; it < opt.instances; ++it) {
    report.nll_max_rel =
        std::max(report.nll_max_rel, gradcheck_nll(g, rng, opt.step, opt.sabotage && it == 0));
    report.prior_max_rel = std::max(report.prior_max_rel, gradcheck_prior(g, rng, opt.step));
  }

  const int model_rounds = std::min(opt.instances, 8);
  for (int it = 0; it < model_rounds; ++it) {
    ModelConfig cfg;
    cfg.input_dim = 5;
    cfg.loss.lambda = 0.3;
    switch (it % 4) {
      case 0:
        cfg.mode = Mode::SM;
        cfg.fine_kind = ExtractorKind::Mlp;
        cfg.feature_dim = 4;
        cfg.hidden_dim = 6;
        break;
      case 1:
        cfg.mode = Mode::BGL1;
        cfg.fine_kind = ExtractorKind::Affine;
        cfg.feature_dim = 4;
        break;
      case 2:
        cfg.mode = Mode::BGL1;
        cfg.fine_kind = ExtractorKind::Mlp;
        cfg.feature_dim = 4;
        cfg.hidden_dim = 6;
        break;
      default:
        cfg.mode = Mode::BGLM;
        cfg.fine_kind = ExtractorKind::Mlp;
        cfg.coarse_kind = ExtractorKind::Affine;
        cfg.feature_dim = 4;
        cfg.hidden_dim = 6;
        break;
    }
    report.model_max_rel = std::max(report.model_max_rel, gradcheck_model(g, cfg, rng, opt.step));
  }

  report.pass = report.nll_max_rel < opt.tolerance && report.prior_max_rel < opt.tolerance &&
                report.model_max_rel < opt.tolerance;
  return report;
}

}  // namespace bgl
