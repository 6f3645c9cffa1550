#include "bgl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bgl {

namespace {

void check_scores(const LabelGraph& g, const ScoreSet& s) {
  if (static_cast<int>(s.fine.size()) != g.k) {
    fail(Errc::ShapeMismatch, "fine scores have length " + std::to_string(s.fine.size()) +
                                  ", graph has k=" + std::to_string(g.k));
  }
  if (static_cast<int>(s.coarse.size()) != g.m()) {
    fail(Errc::ShapeMismatch, "got " + std::to_string(s.coarse.size()) +
                                  " coarse score vectors, graph has m=" + std::to_string(g.m()));
  }
  for (int j = 0; j < g.m(); ++j) {
    if (static_cast<int>(s.coarse[j].size()) != g.coarse_sizes[j]) {
      fail(Errc::ShapeMismatch, "coarse type " + std::to_string(j + 1) + " has " +
                                    std::to_string(s.coarse[j].size()) + " scores, want " +
                                    std::to_string(g.coarse_sizes[j]));
    }
  }
  for (double v : s.fine) {
    if (!std::isfinite(v)) fail(Errc::NonFiniteScore, "non-finite fine score");
  }
  for (const auto& fj : s.coarse) {
    for (double v : fj) {
      if (!std::isfinite(v)) fail(Errc::NonFiniteScore, "non-finite coarse score");
    }
  }
}

void check_posterior(const LabelGraph& g, const Posterior& post) {
  if (static_cast<int>(post.p.size()) != g.k ||
      static_cast<int>(post.log_h.size()) != g.k ||
      static_cast<int>(post.p_coarse.size()) != g.m()) {
    fail(Errc::ShapeMismatch, "posterior not shaped like the graph");
  }
  for (int j = 0; j < g.m(); ++j) {
    if (static_cast<int>(post.p_coarse[j].size()) != g.coarse_sizes[j]) {
      fail(Errc::ShapeMismatch, "posterior coarse type " + std::to_string(j + 1) + " misshaped");
    }
  }
}

void check_label(const LabelGraph& g, int y) {
  if (y < 0 || y >= g.k) {
    fail(Errc::LabelOutOfRange,
         "label " + std::to_string(y + 1) + " not in 1.." + std::to_string(g.k));
  }
}

// log sum_{i: parent(i,type)==coarse} exp(log_h[i]); -inf for empty groups.
double group_logsumexp(const LabelGraph& g, const std::vector<double>& log_h, int type,
                       int coarse) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.k; ++i) {
    if (g.parent_of(i, type) == coarse) mx = std::max(mx, log_h[i]);
  }
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (int i = 0; i < g.k; ++i) {
    if (g.parent_of(i, type) == coarse) sum += std::exp(log_h[i] - mx);
  }
  return mx + std::log(sum);
}

}  // namespace

void check_loss_config(const LabelGraph& g, const LossConfig& cfg) {
  if (!(cfg.lambda >= 0.0)) {
    fail(Errc::InvalidSpec, "lambda must be >= 0, got " + std::to_string(cfg.lambda));
  }
  if (!cfg.coarse_term_weights.empty()) {
    if (static_cast<int>(cfg.coarse_term_weights.size()) != g.m()) {
      fail(Errc::InvalidSpec, "coarse_term_weights has " +
                                  std::to_string(cfg.coarse_term_weights.size()) +
                                  " entries, graph has m=" + std::to_string(g.m()));
    }
    for (double w : cfg.coarse_term_weights) {
      if (!(w >= 0.0)) fail(Errc::InvalidSpec, "coarse_term_weights must be non-negative");
    }
  }
}

double logsumexp(const std::vector<double>& args) {
  if (args.empty()) return -std::numeric_limits<double>::infinity();
  double mx = *std::max_element(args.begin(), args.end());
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double a : args) sum += std::exp(a - mx);
  return mx + std::log(sum);
}

Posterior forward(const LabelGraph& g, const ScoreSet& s) {
  Posterior out;
  forward_into(g, s, out);
  return out;
}

void forward_into(const LabelGraph& g, const ScoreSet& s, Posterior& out) {
  check_scores(g, s);
  const int k = g.k;
  const int m = g.m();

  out.log_h.resize(static_cast<size_t>(k));
  out.p.resize(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    double h = s.fine[i];
    const int* row = m > 0 ? g.parent_row(i) : nullptr;
    for (int j = 0; j < m; ++j) h += s.coarse[j][row[j]];
    out.log_h[i] = h;
  }

  double mx = *std::max_element(out.log_h.begin(), out.log_h.end());
  double z = 0.0;
  for (int i = 0; i < k; ++i) {
    double e = std::exp(out.log_h[i] - mx);
    out.p[i] = e;
    z += e;
  }
  const double inv_z = 1.0 / z;
  for (int i = 0; i < k; ++i) out.p[i] *= inv_z;
  out.log_z = mx + std::log(z);

  out.p_coarse.resize(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    auto& pj = out.p_coarse[j];
    pj.assign(static_cast<size_t>(g.coarse_sizes[j]), 0.0);
    for (int i = 0; i < k; ++i) pj[g.parent_of(i, j)] += out.p[i];
  }
}

double nll(const LabelGraph& g, const ScoreSet& s, int y, const LossConfig& cfg) {
  return nll_from(g, forward(g, s), y, cfg);
}

double nll_from(const LabelGraph& g, const Posterior& post, int y, const LossConfig& cfg) {
  check_posterior(g, post);
  check_label(g, y);
  check_loss_config(g, cfg);
  double value = -(post.log_h[y] - post.log_z);
  for (int j = 0; j < g.m(); ++j) {
    double glse = group_logsumexp(g, post.log_h, j, g.parent_of(y, j));
    value -= cfg.term_weight(j) * (glse - post.log_z);
  }
  if (!std::isfinite(value)) return std::numeric_limits<double>::infinity();
  return value;
}

ScoreGradient backward_naive(const LabelGraph& g, const Posterior& post, int y,
                             const LossConfig& cfg) {
  check_posterior(g, post);
  check_label(g, y);
  check_loss_config(g, cfg);
  const int k = g.k;
  const int m = g.m();

  // Within-group softmax ratios r[j][i] = p_i / p^j_{parent(y,j)}, jointly
  // normalized in the log domain; zero off the group.
  std::vector<std::vector<double>> ratio(static_cast<size_t>(m));
  std::vector<int> y_parent(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    y_parent[j] = g.parent_of(y, j);
    double glse = group_logsumexp(g, post.log_h, j, y_parent[j]);
    ratio[j].assign(static_cast<size_t>(k), 0.0);
    for (int i = 0; i < k; ++i) {
      if (g.parent_of(i, j) == y_parent[j]) ratio[j][i] = std::exp(post.log_h[i] - glse);
    }
  }

  ScoreGradient out;
  out.fine.resize(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    double acc = (i == y ? 1.0 : 0.0) - post.p[i];
    for (int j = 0; j < m; ++j) acc += cfg.term_weight(j) * (ratio[j][i] - post.p[i]);
    out.fine[i] = -acc;
  }

  out.coarse.resize(static_cast<size_t>(m));
  for (int l = 0; l < m; ++l) {
    const double wl = cfg.term_weight(l);
    out.coarse[l].resize(static_cast<size_t>(g.coarse_sizes[l]));
    for (int c = 0; c < g.coarse_sizes[l]; ++c) {
      const double ind = (c == y_parent[l]) ? 1.0 : 0.0;
      double acc = (ind - post.p_coarse[l][c]) + wl * (ind - post.p_coarse[l][c]);
      for (int j = 0; j < m; ++j) {
        if (j == l) continue;
        double inner = 0.0;
        for (int i = 0; i < k; ++i) {
          if (g.parent_of(i, j) == y_parent[j] && g.parent_of(i, l) == c) inner += ratio[j][i];
        }
        acc += cfg.term_weight(j) * (inner - post.p_coarse[l][c]);
      }
      out.coarse[l][c] = -acc;
    }
  }
  return out;
}

ScoreGradient backward_fast(const LabelGraph& g, const Posterior& post, int y,
                            const LossConfig& cfg) {
  ScoreGradient out;
  backward_fast_into(g, post, y, cfg, out);
  return out;
}

void backward_fast_into(const LabelGraph& g, const Posterior& post, int y, const LossConfig& cfg,
                        ScoreGradient& out) {
  check_posterior(g, post);
  check_label(g, y);
  check_loss_config(g, cfg);
  const int k = g.k;
  const int m = g.m();

  double weight_sum = 0.0;
  std::vector<int> y_parent(static_cast<size_t>(m));
  std::vector<double> glse(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    weight_sum += cfg.term_weight(j);
    y_parent[j] = g.parent_of(y, j);
    glse[j] = group_logsumexp(g, post.log_h, j, y_parent[j]);
  }

  // q[i] accumulates the active weighted ratios w_j * p_i / p^j_{parent(y,j)}
  // over the types whose active group contains i.
  std::vector<double> q(static_cast<size_t>(k), 0.0);
  for (int j = 0; j < m; ++j) {
    const double wj = cfg.term_weight(j);
    for (int i = 0; i < k; ++i) {
      if (g.parent_of(i, j) == y_parent[j]) q[i] += wj * std::exp(post.log_h[i] - glse[j]);
    }
  }

  out.fine.resize(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    double acc = (i == y ? 1.0 : 0.0) - post.p[i] + q[i] - weight_sum * post.p[i];
    out.fine[i] = -acc;
  }

  out.coarse.resize(static_cast<size_t>(m));
  for (int l = 0; l < m; ++l) {
    const double wl = cfg.term_weight(l);
    const double w_other = weight_sum - wl;
    auto& dl = out.coarse[l];
    dl.assign(static_cast<size_t>(g.coarse_sizes[l]), 0.0);
    // Cumulative cross-type mass per coarse label of type l, with the l-typed
    // ratio removed from its own active group.
    for (int i = 0; i < k; ++i) {
      const int c = g.parent_of(i, l);
      double v = q[i];
      if (c == y_parent[l]) v -= wl * std::exp(post.log_h[i] - glse[l]);
      dl[c] += v;
    }
    for (int c = 0; c < g.coarse_sizes[l]; ++c) {
      const double ind = (c == y_parent[l]) ? 1.0 : 0.0;
      double acc = (1.0 + wl) * (ind - post.p_coarse[l][c]);
      acc += dl[c] - w_other * post.p_coarse[l][c];
      dl[c] = -acc;
    }
  }
}

}  // namespace bgl
