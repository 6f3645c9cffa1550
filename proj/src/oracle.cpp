#include "bgl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bgl::oracle {

namespace {

constexpr double kMaxStates = 1e7;

void check_shapes(const LabelGraph& g, const ScoreSet& s) {
  if (static_cast<int>(s.fine.size()) != g.k || static_cast<int>(s.coarse.size()) != g.m()) {
    fail(Errc::ShapeMismatch, "scores not shaped like the graph");
  }
  for (int j = 0; j < g.m(); ++j) {
    if (static_cast<int>(s.coarse[j].size()) != g.coarse_sizes[j]) {
      fail(Errc::ShapeMismatch, "coarse type " + std::to_string(j + 1) + " scores misshaped");
    }
  }
}

}  // namespace

JointTable enumerate_joint(const LabelGraph& g, const ScoreSet& s) {
  check_shapes(g, s);
  const int m = g.m();

  double states_total = g.k;
  long combos = 1;
  for (int j = 0; j < m; ++j) {
    states_total *= g.coarse_sizes[j];
    combos *= g.coarse_sizes[j];
  }
  if (states_total > kMaxStates) {
    fail(Errc::InstanceTooLarge, "joint enumeration would visit " + std::to_string(states_total) +
                                     " states (limit 1e7)");
  }

  JointTable out;
  std::vector<int> c(static_cast<size_t>(m), 0);
  for (int i = 0; i < g.k; ++i) {
    std::fill(c.begin(), c.end(), 0);
    for (long combo = 0; combo < combos; ++combo) {
      bool connected = true;
      double score = std::exp(s.fine[i]);
      for (int j = 0; j < m; ++j) {
        if (g.parent_of(i, j) != c[j]) connected = false;
        score *= std::exp(s.coarse[j][c[j]]);
      }
      if (connected) {
        out.z += score;
        out.states.push_back({i, c, score});
      }
      for (int j = m - 1; j >= 0; --j) {
        if (++c[j] < g.coarse_sizes[j]) break;
        c[j] = 0;
      }
    }
  }

  out.p.assign(static_cast<size_t>(g.k), 0.0);
  out.p_coarse.resize(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) out.p_coarse[j].assign(static_cast<size_t>(g.coarse_sizes[j]), 0.0);
  for (const auto& st : out.states) {
    const double prob = st.score / out.z;
    out.p[st.fine] += prob;
    for (int j = 0; j < m; ++j) out.p_coarse[j][st.coarse[j]] += prob;
  }
  return out;
}

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& loss_fn,
                                const std::vector<double>& point, double step) {
  if (!(step > 0.0)) fail(Errc::InvalidSpec, "finite-difference step must be > 0");
  std::vector<double> grad(point.size());
  std::vector<double> x = point;
  for (size_t idx = 0; idx < point.size(); ++idx) {
    x[idx] = point[idx] + step;
    const double up = loss_fn(x);
    x[idx] = point[idx] - step;
    const double down = loss_fn(x);
    x[idx] = point[idx];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      fail(Errc::NonFiniteLoss, "loss not finite near the evaluation point");
    }
    grad[idx] = (up - down) / (2.0 * step);
  }
  return grad;
}

std::vector<double> softmax_ref(const std::vector<double>& f) {
  const double mx = *std::max_element(f.begin(), f.end());
  std::vector<double> p(f.size());
  double sum = 0.0;
  for (size_t i = 0; i < f.size(); ++i) {
    p[i] = std::exp(f[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double softmax_nll_ref(const std::vector<double>& f, int y) {
  if (y < 0 || y >= static_cast<int>(f.size())) fail(Errc::LabelOutOfRange, "label out of range");
  const double mx = *std::max_element(f.begin(), f.end());
  double sum = 0.0;
  for (double v : f) sum += std::exp(v - mx);
  return mx + std::log(sum) - f[y];
}

std::vector<double> softmax_grad_ref(const std::vector<double>& f, int y) {
  if (y < 0 || y >= static_cast<int>(f.size())) fail(Errc::LabelOutOfRange, "label out of range");
  std::vector<double> g = softmax_ref(f);
  g[y] -= 1.0;
  return g;
}

}  // namespace bgl::oracle
