#include "bgl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>

#include "bgl/model.hpp"
#include "bgl/parallel.hpp"
#include "bgl/random_instances.hpp"
#include "bgl/synth.hpp"

namespace bgl {

namespace {

using Clock = std::chrono::steady_clock;

double ns_of(Clock::duration d) {
  return std::chrono::duration<double, std::nano>(d).count();
}

// Median ns per call. Short calls are batched so each timed sample spans at
// least ~20us of wall clock.
double time_variant(const std::function<void()>& fn, int reps, int warmup) {
  for (int i = 0; i < warmup; ++i) fn();

  auto probe_start = Clock::now();
  fn();
  const double probe_ns = ns_of(Clock::now() - probe_start);
  long inner = 1;
  if (probe_ns < 20000.0) {
    inner = std::min<long>(100000, static_cast<long>(20000.0 / std::max(probe_ns, 1.0)) + 1);
  }

  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto start = Clock::now();
    for (long i = 0; i < inner; ++i) fn();
    samples.push_back(ns_of(Clock::now() - start) / static_cast<double>(inner));
  }
  const auto mid = samples.begin() + static_cast<long>(samples.size() / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  return *mid;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchSpec& spec) {
  if (spec.reps < 1) fail(Errc::InvalidSpec, "bench needs reps >= 1");
  if (spec.warmup < 0) fail(Errc::InvalidSpec, "bench warmup must be >= 0");
  if (spec.ks.empty() || spec.ms.empty() || spec.kjs.empty()) {
    fail(Errc::InvalidSpec, "bench needs at least one k, m, and kj");
  }

  std::vector<BenchRow> rows;
  double sink = 0.0;

  for (int k : spec.ks) {
    for (int m : spec.ms) {
      for (int kj : spec.kjs) {
        if (k < 1 || m < 0 || kj < 1) fail(Errc::InvalidSpec, "bench sizes must be positive");
        if (static_cast<double>(k) * std::max(m, 1) * kj > 1e8) {
          fail(Errc::InstanceTooLarge, "bench configuration k=" + std::to_string(k) + " m=" +
                                           std::to_string(m) + " kj=" + std::to_string(kj) +
                                           " is past the 1e8 guard");
        }
        std::mt19937_64 rng(spec.seed);
        const LabelGraph g = round_robin_graph(k, std::vector<int>(static_cast<size_t>(m), kj));
        const ScoreSet scores = random_scores(rng, g, 2.0);
        const Posterior post = forward(g, scores);
        const int y = std::uniform_int_distribution<int>(0, k - 1)(rng);
        const LossConfig cfg;

        const auto push = [&](const char* variant, const std::function<void()>& fn) {
          rows.push_back({k, m, kj, variant, time_variant(fn, spec.reps, spec.warmup)});
        };

        // Plain softmax baseline over the same k fine scores, allocation-free.
        std::vector<double> sm_p(static_cast<size_t>(k));
        push("softmax_forward", [&] {
          const double mx = *std::max_element(scores.fine.begin(), scores.fine.end());
          double z = 0.0;
          for (int i = 0; i < k; ++i) {
            sm_p[static_cast<size_t>(i)] = std::exp(scores.fine[static_cast<size_t>(i)] - mx);
            z += sm_p[static_cast<size_t>(i)];
          }
          const double inv = 1.0 / z;
          for (int i = 0; i < k; ++i) sm_p[static_cast<size_t>(i)] *= inv;
          sink += sm_p[0];
        });

        std::vector<double> sm_grad(static_cast<size_t>(k));
        push("softmax_backward", [&] {
          std::copy(sm_p.begin(), sm_p.end(), sm_grad.begin());
          sm_grad[static_cast<size_t>(y)] -= 1.0;
          sink += sm_grad[0];
        });

        Posterior post_buf;
        push("bgl_forward", [&] {
          forward_into(g, scores, post_buf);
          sink += post_buf.p[0];
        });

        push("backward_naive", [&] {
          const ScoreGradient ds = backward_naive(g, post, y, cfg);
          sink += ds.fine[0];
        });

        ScoreGradient fast_buf;
        push("backward_fast", [&] {
          backward_fast_into(g, post, y, cfg, fast_buf);
          sink += fast_buf.fine[0];
        });

        if (spec.batch_variants) {
          // Same batch-gradient accumulation the trainer runs, serial chunks
          // vs parallel chunks.
          const int d = 32;
          const int batch = 64;
          ModelConfig mc;
          mc.mode = m > 0 ? Mode::BGL1 : Mode::SM;
          mc.input_dim = d;
          std::mt19937_64 mrng(spec.seed);
          Model model = make_model(mc, g, mrng);
          Eigen::MatrixXd xs(d, batch);
          std::normal_distribution<double> randn(0.0, 1.0);
          for (long i = 0; i < xs.size(); ++i) xs.data()[i] = randn(mrng);
          std::vector<int> ys(static_cast<size_t>(batch));
          for (int& v : ys) v = std::uniform_int_distribution<int>(0, k - 1)(mrng);

          const auto batch_grad = [&](int workers) {
            const int chunks = chunk_count(batch, workers);
            std::vector<ModelGrads> partial;
            partial.reserve(static_cast<size_t>(chunks));
            for (int c = 0; c < chunks; ++c) partial.push_back(zero_grads(model));
            std::vector<double> partial_loss(static_cast<size_t>(chunks), 0.0);
            for_each_chunk(batch, workers, [&](int begin, int end, int chunk) {
              for (int t = begin; t < end; ++t) {
                partial_loss[static_cast<size_t>(chunk)] +=
                    backprop(model, xs.col(t), ys[static_cast<size_t>(t)],
                             partial[static_cast<size_t>(chunk)]);
              }
            });
            double loss = 0.0;
            for (int c = 0; c < chunks; ++c) loss += partial_loss[static_cast<size_t>(c)];
            sink += loss + partial[0].params.W(0, 0);
          };
          push("batch_backprop_serial", [&] { batch_grad(1); });
          push("batch_backprop_parallel", [&] { batch_grad(spec.workers); });
        }
      }
    }
  }

  volatile double discard = sink;
  (void)discard;
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << "k,m,kj,variant,median_ns\n";
  char buf[64];
  for (const BenchRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%s,%.1f", row.k, row.m, row.kj,
                  row.variant.c_str(), row.median_ns);
    out << buf << "\n";
  }
}

void write_bench_csv_file(const std::vector<BenchRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot open '" + path + "' for writing");
  write_bench_csv(rows, out);
  if (!out) fail(Errc::IoError, "write to '" + path + "' failed");
}

}  // namespace bgl
