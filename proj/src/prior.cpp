#include "bgl/prior.hpp"

#include <string>

namespace bgl {

void check_params(const LabelGraph& g, const ParamSet& params) {
  if (static_cast<int>(params.W.cols()) != g.k) {
    fail(Errc::ShapeMismatch, "W has " + std::to_string(params.W.cols()) + " columns, graph has k=" +
                                  std::to_string(g.k));
  }
  if (static_cast<int>(params.W_coarse.size()) != g.m()) {
    fail(Errc::ShapeMismatch, "got " + std::to_string(params.W_coarse.size()) +
                                  " coarse blocks, graph has m=" + std::to_string(g.m()));
  }
  for (int j = 0; j < g.m(); ++j) {
    if (static_cast<int>(params.W_coarse[j].cols()) != g.coarse_sizes[j]) {
      fail(Errc::ShapeMismatch, "coarse block " + std::to_string(j + 1) + " has " +
                                    std::to_string(params.W_coarse[j].cols()) + " columns, want " +
                                    std::to_string(g.coarse_sizes[j]));
    }
  }
}

ParamSet zeros_like(const ParamSet& params) {
  ParamSet out;
  out.W = Eigen::MatrixXd::Zero(params.W.rows(), params.W.cols());
  out.W_coarse.reserve(params.W_coarse.size());
  for (const auto& b : params.W_coarse) {
    out.W_coarse.push_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
  }
  return out;
}

namespace {

void check_prior_dims(const LabelGraph& g, const ParamSet& params) {
  check_params(g, params);
  for (int j = 0; j < g.m(); ++j) {
    if (params.W_coarse[j].rows() != params.W.rows()) {
      fail(Errc::ShapeMismatch, "prior coupling needs equal feature dims; coarse block " +
                                    std::to_string(j + 1) + " has " +
                                    std::to_string(params.W_coarse[j].rows()) + " rows, fine head has " +
                                    std::to_string(params.W.rows()));
    }
  }
}

}  // namespace

double prior_penalty(const LabelGraph& g, const ParamSet& params, double lambda) {
  check_prior_dims(g, params);
  double acc = 0.0;
  for (int i = 0; i < g.k; ++i) {
    for (int j = 0; j < g.m(); ++j) {
      acc += (params.W.col(i) - params.W_coarse[j].col(g.parent_of(i, j))).squaredNorm();
    }
  }
  return 0.5 * lambda * acc;
}

ParamSet prior_gradient(const LabelGraph& g, const ParamSet& params, double lambda) {
  check_prior_dims(g, params);
  ParamSet grad = zeros_like(params);
  for (int i = 0; i < g.k; ++i) {
    for (int j = 0; j < g.m(); ++j) {
      const int c = g.parent_of(i, j);
      Eigen::VectorXd diff = params.W.col(i) - params.W_coarse[j].col(c);
      grad.W.col(i) += diff;
      grad.W_coarse[j].col(c) -= diff;
    }
  }
  grad.W *= lambda;
  for (auto& b : grad.W_coarse) b *= lambda;
  return grad;
}

}  // namespace bgl
