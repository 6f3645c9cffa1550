#include "bgl/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "bgl/parallel.hpp"

namespace bgl {

namespace {

void check_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) fail(Errc::InvalidSpec, "epochs must be >= 1");
  if (cfg.batch_size < 1) fail(Errc::InvalidSpec, "batch_size must be >= 1");
  if (!(cfg.learning_rate >= 0.0)) fail(Errc::InvalidSpec, "learning_rate must be >= 0");
  if (!(cfg.lr_decay >= 0.0 && cfg.lr_decay <= 1.0)) {
    fail(Errc::InvalidSpec, "lr_decay must be in [0, 1]");
  }
  if (!(cfg.weight_decay >= 0.0)) fail(Errc::InvalidSpec, "weight_decay must be >= 0");
  if (cfg.eval_every < 1) fail(Errc::InvalidSpec, "eval_every must be >= 1");
  if (cfg.workers < 0) fail(Errc::InvalidSpec, "workers must be >= 0");
}

void check_data(const Model& model, const Dataset& data, const char* role) {
  if (data.n() < 1) fail(Errc::InvalidSpec, std::string(role) + " dataset is empty");
  if (data.d() != model.config.input_dim) {
    fail(Errc::ShapeMismatch, std::string(role) + " features have d=" + std::to_string(data.d()) +
                                  ", model wants " + std::to_string(model.config.input_dim));
  }
  if (data.graph.k != model.graph.k) {
    fail(Errc::SizeMismatch, std::string(role) + " graph has k=" + std::to_string(data.graph.k) +
                                 ", model has k=" + std::to_string(model.graph.k));
  }
  for (int y : data.labels) {
    if (y < 0 || y >= model.graph.k) {
      fail(Errc::LabelOutOfRange, std::string(role) + " label " + std::to_string(y + 1) +
                                      " not in 1.." + std::to_string(model.graph.k));
    }
  }
}

void add_grads(ModelGrads& into, const ModelGrads& from) {
  into.params.W += from.params.W;
  for (size_t j = 0; j < into.params.W_coarse.size(); ++j) {
    into.params.W_coarse[j] += from.params.W_coarse[j];
  }
  into.fine.A1 += from.fine.A1;
  into.fine.b1 += from.fine.b1;
  into.fine.A2 += from.fine.A2;
  into.fine.b2 += from.fine.b2;
  into.coarse.A1 += from.coarse.A1;
  into.coarse.b1 += from.coarse.b1;
  into.coarse.A2 += from.coarse.A2;
  into.coarse.b2 += from.coarse.b2;
}

}  // namespace

EvalResult evaluate(const Model& model, const Dataset& data) {
  check_data(model, data, "eval");
  const LabelGraph& dg = data.graph;
  const int m = dg.m();

  long fine_correct = 0;
  std::vector<long> coarse_correct(static_cast<size_t>(m), 0);
  std::vector<double> group_mass;
  Posterior post;

  for (int i = 0; i < data.n(); ++i) {
    const ScoreSet s = score(model, data.features.col(i));
    forward_into(model.graph, s, post);

    int pred = 0;
    for (int c = 1; c < model.graph.k; ++c) {
      if (post.p[c] > post.p[pred]) pred = c;
    }
    const int y = data.labels[static_cast<size_t>(i)];
    if (pred == y) ++fine_correct;

    for (int j = 0; j < m; ++j) {
      group_mass.assign(static_cast<size_t>(dg.coarse_sizes[j]), 0.0);
      for (int c = 0; c < dg.k; ++c) group_mass[dg.parent_of(c, j)] += post.p[c];
      int cpred = 0;
      for (int c = 1; c < dg.coarse_sizes[j]; ++c) {
        if (group_mass[c] > group_mass[cpred]) cpred = c;
      }
      if (cpred == dg.parent_of(y, j)) ++coarse_correct[static_cast<size_t>(j)];
    }
  }

  EvalResult out;
  out.fine_acc = static_cast<double>(fine_correct) / data.n();
  out.coarse_acc.resize(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    out.coarse_acc[static_cast<size_t>(j)] =
        static_cast<double>(coarse_correct[static_cast<size_t>(j)]) / data.n();
  }
  return out;
}

TrainReport train(Model& model, const Dataset& train_data, const Dataset& eval_data,
                  const TrainConfig& cfg) {
  check_train_config(cfg);
  check_data(model, train_data, "train");
  check_data(model, eval_data, "eval");

  const int n = train_data.n();
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);

  TrainReport report;
  report.coarse_types = eval_data.graph.m();
  std::optional<EvalResult> metrics;
  if (cfg.eval_every > 1) metrics = evaluate(model, eval_data);  // rows before the first refresh

  for (int epoch = 1; epoch <= cfg.epochs && !report.diverged; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr_e = cfg.learning_rate * std::pow(cfg.lr_decay, epoch - 1);
    std::shuffle(perm.begin(), perm.end(), rng);

    double loss_sum = 0.0;
    for (int start = 0; start < n && !report.diverged; start += cfg.batch_size) {
      const int bn = std::min(cfg.batch_size, n - start);
      const int chunks = chunk_count(bn, cfg.workers);
      std::vector<ModelGrads> partial;
      partial.reserve(static_cast<size_t>(chunks));
      for (int c = 0; c < chunks; ++c) partial.push_back(zero_grads(model));
      std::vector<double> partial_loss(static_cast<size_t>(chunks), 0.0);
      std::atomic<bool> bad{false};

      for_each_chunk(bn, cfg.workers, [&](int begin, int end, int chunk) {
        for (int t = begin; t < end; ++t) {
          if (bad.load(std::memory_order_relaxed)) return;
          const int idx = perm[static_cast<size_t>(start + t)];
          try {
            partial_loss[static_cast<size_t>(chunk)] +=
                backprop(model, train_data.features.col(idx),
                         train_data.labels[static_cast<size_t>(idx)],
                         partial[static_cast<size_t>(chunk)]);
          } catch (const Error&) {
            // blown-up scores surface here; treated below as divergence
            partial_loss[static_cast<size_t>(chunk)] =
                std::numeric_limits<double>::infinity();
            bad.store(true, std::memory_order_relaxed);
          }
        }
      });

      double batch_loss = 0.0;
      for (int c = 0; c < chunks; ++c) batch_loss += partial_loss[static_cast<size_t>(c)];
      if (bad.load() || !std::isfinite(batch_loss)) {
        report.diverged = true;
        break;  // no update from this batch; report covers completed epochs
      }
      loss_sum += batch_loss;

      for (int c = 1; c < chunks; ++c) add_grads(partial[0], partial[static_cast<size_t>(c)]);
      const double scale = 1.0 / bn;
      auto pblocks = param_blocks(model);
      auto gblocks = grad_blocks(model, partial[0]);
      for (size_t b = 0; b < pblocks.size(); ++b) {
        double* p = pblocks[b].data;
        const double* gr = gblocks[b].data;
        for (long idx = 0; idx < pblocks[b].size(); ++idx) {
          p[idx] -= lr_e * (gr[idx] * scale + cfg.weight_decay * p[idx]);
        }
      }
    }
    if (report.diverged) break;

    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs || !metrics) {
      try {
        metrics = evaluate(model, eval_data);
      } catch (const Error& e) {
        if (e.code() != Errc::NonFiniteScore && e.code() != Errc::NonFiniteLoss) throw;
        report.diverged = true;  // the updates drove the parameters non-finite
        break;
      }
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.rows.push_back(
        {epoch, loss_sum / n, metrics->fine_acc, metrics->coarse_acc, seconds});
  }

  if (!report.diverged && !cfg.checkpoint_path.empty()) {
    save_checkpoint_file(model, cfg.checkpoint_path);
  }
  return report;
}

void write_report_csv(const TrainReport& report, std::ostream& out) {
  out << "epoch,loss,fine_acc";
  for (int j = 1; j <= report.coarse_types; ++j) out << ",coarse_acc_" << j;
  out << ",seconds\n";
  char buf[64];
  for (const EpochRow& row : report.rows) {
    out << row.epoch;
    std::snprintf(buf, sizeof buf, ",%.17g", row.loss);
    out << buf;
    std::snprintf(buf, sizeof buf, ",%.17g", row.fine_acc);
    out << buf;
    for (double acc : row.coarse_acc) {
      std::snprintf(buf, sizeof buf, ",%.17g", acc);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.3f", row.seconds);
    out << buf << "\n";
  }
}

void write_report_csv_file(const TrainReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot open '" + path + "' for writing");
  write_report_csv(report, out);
  if (!out) fail(Errc::IoError, "write to '" + path + "' failed");
}

TrainConfig benchmark_train_config() {
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.1;
  cfg.lr_decay = 0.97;
  cfg.weight_decay = 1e-4;
  cfg.eval_every = 10;
  return cfg;
}

}  // namespace bgl
