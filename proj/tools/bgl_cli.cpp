// Command-line front end: train/eval structured-softmax models, check
// gradients against finite differences, generate synthetic hierarchical
// datasets, and benchmark the backward-pass variants.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
// failure (divergence or a failed gradient check).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bgl/bench.hpp"
#include "bgl/gradcheck.hpp"
#include "bgl/model.hpp"
#include "bgl/random_instances.hpp"
#include "bgl/synth.hpp"
#include "bgl/trainer.hpp"

namespace {

int exit_code_for(bgl::Errc code) {
  switch (code) {
    case bgl::Errc::NonFiniteScore:
    case bgl::Errc::NonFiniteLoss:
    case bgl::Errc::DivergedLoss:
      return 3;
    default:
      return 2;
  }
}

// CLI11 only honours set_config on the root app, so subcommand config files
// are applied by hand: every `key = value` line fills the matching option
// unless the command line already set it.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bgl::Error(bgl::Errc::IoError, "cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = CLI::detail::trim_copy(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw bgl::Error(bgl::Errc::ParseError,
                       path + " line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = CLI::detail::trim_copy(line.substr(0, eq));
    const std::string value = CLI::detail::trim_copy(line.substr(eq + 1));
    CLI::Option* op = cmd->get_option_no_throw("--" + key);
    if (op == nullptr || key.empty()) {
      throw bgl::Error(bgl::Errc::ParseError, path + " line " + std::to_string(lineno) +
                                                  ": unknown key '" + key + "'");
    }
    if (op->count() > 0) continue;
    op->add_result(value);
    op->run_callback();
  }
}

int require_options(CLI::App* cmd, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (cmd->get_option(name)->count() == 0) {
      std::cerr << cmd->get_name() << ": " << name << " is required\n";
      return 1;
    }
  }
  return 0;
}

struct TrainArgs {
  std::string graph_path;
  std::string data_path;
  std::string eval_data_path;
  std::string out_dir = ".";
  std::string mode = "sm";
  std::string extractor = "identity";
  std::string coarse_extractor = "identity";
  int feature_dim = 0;
  int coarse_feature_dim = 0;
  int hidden_dim = 0;
  double lambda = 1e-4;
  std::vector<double> coarse_weights;
  bgl::TrainConfig tc;
};

int run_train(const TrainArgs& args) {
  const bgl::LabelGraph graph = bgl::load_graph_file(args.graph_path);
  bgl::Dataset data = bgl::load_dataset_file(args.data_path);
  bgl::attach_graph(data, graph);
  bgl::Dataset eval_data = data;
  if (!args.eval_data_path.empty()) {
    eval_data = bgl::load_dataset_file(args.eval_data_path);
    bgl::attach_graph(eval_data, graph);
  }

  bgl::ModelConfig mc;
  mc.mode = bgl::parse_mode(args.mode);
  mc.fine_kind = bgl::parse_extractor_kind(args.extractor);
  mc.coarse_kind = bgl::parse_extractor_kind(args.coarse_extractor);
  mc.input_dim = data.d();
  mc.feature_dim = args.feature_dim;
  mc.coarse_feature_dim = args.coarse_feature_dim;
  mc.hidden_dim = args.hidden_dim;
  mc.loss.lambda = args.lambda;
  mc.loss.coarse_term_weights = args.coarse_weights;

  std::mt19937_64 rng(args.tc.rng_seed);
  bgl::Model model = bgl::make_model(mc, graph, rng);

  std::error_code ec;
  std::filesystem::create_directories(args.out_dir, ec);
  if (ec) bgl::fail(bgl::Errc::IoError, "cannot create '" + args.out_dir + "': " + ec.message());

  bgl::TrainConfig tc = args.tc;
  tc.checkpoint_path = args.out_dir + "/model.ckpt";
  const bgl::TrainReport report = bgl::train(model, data, eval_data, tc);
  bgl::write_report_csv_file(report, args.out_dir + "/report.csv");

  if (report.diverged) {
    std::cerr << "error: training diverged (non-finite loss) after " << report.rows.size()
              << " completed epochs; partial report written, no checkpoint\n";
    return 3;
  }
  const bgl::EpochRow& last = report.rows.back();
  std::cout << "trained " << args.mode << " model: epoch " << last.epoch << " loss " << last.loss
            << " fine_acc " << last.fine_acc << "\n";
  std::cout << "wrote " << args.out_dir << "/report.csv and " << args.out_dir << "/model.ckpt\n";
  return 0;
}

struct EvalArgs {
  std::string graph_path;
  std::string data_path;
  std::string model_path;
};

int run_eval(const EvalArgs& args) {
  const bgl::LabelGraph graph = bgl::load_graph_file(args.graph_path);
  bgl::Dataset data = bgl::load_dataset_file(args.data_path);
  bgl::attach_graph(data, graph);
  const bgl::Model model = bgl::load_checkpoint_file(args.model_path);
  const bgl::EvalResult result = bgl::evaluate(model, data);
  std::printf("fine_acc=%.17g\n", result.fine_acc);
  for (size_t j = 0; j < result.coarse_acc.size(); ++j) {
    std::printf("coarse_acc_%zu=%.17g\n", j + 1, result.coarse_acc[j]);
  }
  return 0;
}

struct GradcheckArgs {
  std::string graph_path;
  bool random_graph = false;
  int k = 6;
  int m = 2;
  int kj = 3;
  bgl::GradcheckOptions opt;
};

int run_gradcheck(const GradcheckArgs& args) {
  bgl::LabelGraph graph;
  if (!args.graph_path.empty()) {
    graph = bgl::load_graph_file(args.graph_path);
  } else if (args.random_graph) {
    std::mt19937_64 rng(args.opt.seed);
    graph = bgl::random_graph(rng, args.k, args.m, args.kj);
  } else {
    bgl::fail(bgl::Errc::InvalidSpec, "gradcheck needs --graph FILE or --random");
  }

  const bgl::GradcheckReport report = bgl::run_gradcheck(graph, args.opt);
  std::printf("nll    max rel err: %.3e\n", report.nll_max_rel);
  std::printf("prior  max rel err: %.3e\n", report.prior_max_rel);
  std::printf("model  max rel err: %.3e\n", report.model_max_rel);
  if (!report.pass) {
    std::printf("gradcheck FAIL (tolerance %.1e)\n", args.opt.tolerance);
    return 3;
  }
  std::printf("gradcheck PASS (tolerance %.1e)\n", args.opt.tolerance);
  return 0;
}

struct BenchArgs {
  bgl::BenchSpec spec;
  std::string out_path;
};

int run_bench(const BenchArgs& args) {
  const std::vector<bgl::BenchRow> rows = bgl::run_bench(args.spec);
  if (args.out_path.empty()) {
    bgl::write_bench_csv(rows, std::cout);
  } else {
    bgl::write_bench_csv_file(rows, args.out_path);
    std::cout << "wrote " << args.out_path << "\n";
  }
  return 0;
}

struct SynthArgs {
  bgl::SynthSpec spec = bgl::benchmark_spec();
  int m_flag = -1;
  std::vector<int> sizes_flag;
  std::string out_data = "synth_data.txt";
  std::string out_graph = "synth_graph.txt";
};

int run_synth(SynthArgs& args) {
  if (!args.sizes_flag.empty()) {
    if (args.m_flag >= 0 && args.m_flag != static_cast<int>(args.sizes_flag.size())) {
      bgl::fail(bgl::Errc::InvalidSpec, "--m disagrees with the number of --sizes entries");
    }
    args.spec.coarse_sizes = args.sizes_flag;
  } else if (args.m_flag >= 0) {
    if (args.m_flag == 0) {
      args.spec.coarse_sizes.clear();
    } else {
      bgl::fail(bgl::Errc::InvalidSpec, "--m needs --sizes listing one size per coarse type");
    }
  }
  const bgl::Dataset data = bgl::generate(args.spec);
  bgl::save_dataset_file(data, args.out_data);
  bgl::save_graph_file(data.graph, args.out_graph);
  std::cout << "wrote " << args.out_data << " (" << data.n() << " samples) and " << args.out_graph
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured softmax over bipartite fine/coarse label graphs"};
  app.require_subcommand(1);

  TrainArgs train_args;
  std::string train_config;
  CLI::App* train_cmd = app.add_subcommand("train", "fit a model, write report.csv + model.ckpt");
  train_cmd->add_option("--graph", train_args.graph_path, "label graph file");
  train_cmd->add_option("--data", train_args.data_path, "training dataset file");
  train_cmd->add_option("--eval-data", train_args.eval_data_path,
                        "held-out dataset for the report metrics (default: training data)");
  train_cmd->add_option("--out", train_args.out_dir, "output directory");
  train_cmd->add_option("--mode", train_args.mode, "sm | bgl1 | bglm");
  train_cmd->add_option("--extractor", train_args.extractor, "identity | affine | mlp");
  train_cmd->add_option("--coarse-extractor", train_args.coarse_extractor,
                        "bglm second net: identity | affine | mlp");
  train_cmd->add_option("--feature-dim", train_args.feature_dim, "0 = input dim");
  train_cmd->add_option("--coarse-feature-dim", train_args.coarse_feature_dim,
                        "bglm coarse feature dim, 0 = feature dim");
  train_cmd->add_option("--hidden-dim", train_args.hidden_dim, "mlp hidden width, 0 = feature dim");
  train_cmd->add_option("--lambda", train_args.lambda, "weight-coupling prior strength");
  train_cmd->add_option("--coarse-weight", train_args.coarse_weights,
                        "per-type loss term weights (default all 1)")
      ->delimiter(',');
  train_cmd->add_option("--epochs", train_args.tc.epochs);
  train_cmd->add_option("--batch-size", train_args.tc.batch_size);
  train_cmd->add_option("--lr", train_args.tc.learning_rate);
  train_cmd->add_option("--lr-decay", train_args.tc.lr_decay);
  train_cmd->add_option("--weight-decay", train_args.tc.weight_decay);
  train_cmd->add_option("--seed", train_args.tc.rng_seed);
  train_cmd->add_option("--eval-every", train_args.tc.eval_every);
  train_cmd->add_option("--workers", train_args.tc.workers, "0 = all hardware threads");
  train_cmd->add_option("--config", train_config, "key=value file; command-line flags win");

  EvalArgs eval_args;
  std::string eval_config;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--graph", eval_args.graph_path, "label graph file");
  eval_cmd->add_option("--data", eval_args.data_path, "dataset file");
  eval_cmd->add_option("--model", eval_args.model_path, "checkpoint file");
  eval_cmd->add_option("--config", eval_config, "key=value file; command-line flags win");

  GradcheckArgs gc_args;
  std::string gc_config;
  CLI::App* gc_cmd =
      app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  gc_cmd->add_option("--graph", gc_args.graph_path, "label graph file");
  gc_cmd->add_flag("--random", gc_args.random_graph, "use a random graph instead of --graph");
  gc_cmd->add_option("--k", gc_args.k, "--random: max fine classes");
  gc_cmd->add_option("--m", gc_args.m, "--random: max coarse types");
  gc_cmd->add_option("--kj", gc_args.kj, "--random: max classes per coarse type");
  gc_cmd->add_option("--instances", gc_args.opt.instances);
  gc_cmd->add_option("--step", gc_args.opt.step);
  gc_cmd->add_option("--tol", gc_args.opt.tolerance);
  gc_cmd->add_option("--seed", gc_args.opt.seed);
  gc_cmd->add_flag("--sabotage", gc_args.opt.sabotage,
                   "corrupt one analytic coordinate (negative control; must fail)");
  gc_cmd->add_option("--config", gc_config, "key=value file; command-line flags win");

  BenchArgs bench_args;
  std::string bench_config;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "time forward/backward variants over a size grid");
  bench_cmd->add_option("--k", bench_args.spec.ks, "fine class counts")->delimiter(',');
  bench_cmd->add_option("--m", bench_args.spec.ms, "coarse type counts")->delimiter(',');
  bench_cmd->add_option("--kj", bench_args.spec.kjs, "classes per coarse type")->delimiter(',');
  bench_cmd->add_option("--reps", bench_args.spec.reps, "timed repetitions (median reported)");
  bench_cmd->add_option("--warmup", bench_args.spec.warmup, "discarded warmup calls");
  bench_cmd->add_option("--seed", bench_args.spec.seed);
  bench_cmd->add_flag("--batch-variants", bench_args.spec.batch_variants,
                      "also time serial vs parallel batch gradients");
  bench_cmd->add_option("--workers", bench_args.spec.workers,
                        "parallel batch variant workers, 0 = all");
  bench_cmd->add_option("--out", bench_args.out_path, "CSV path (default: stdout)");
  bench_cmd->add_option("--config", bench_config, "key=value file; command-line flags win");

  SynthArgs synth_args;
  std::string synth_config;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate a planted-hierarchy dataset + graph");
  synth_cmd->add_option("--k", synth_args.spec.k, "fine classes");
  synth_cmd->add_option("--m", synth_args.m_flag, "coarse types (must match --sizes)");
  synth_cmd->add_option("--sizes", synth_args.sizes_flag, "classes per coarse type")
      ->delimiter(',');
  synth_cmd->add_option("--d", synth_args.spec.feature_dim, "feature dimension");
  synth_cmd->add_option("--n", synth_args.spec.samples_per_class, "samples per fine class");
  synth_cmd->add_option("--noise", synth_args.spec.within_fine_noise, "sample spread");
  synth_cmd->add_option("--coarse-scale", synth_args.spec.coarse_center_scale,
                        "coarse theme center spread");
  synth_cmd->add_option("--offset-scale", synth_args.spec.fine_offset_scale,
                        "fine class offset spread");
  synth_cmd->add_option("--seed", synth_args.spec.rng_seed);
  synth_cmd->add_flag("--random-parents", synth_args.spec.random_parents,
                      "uniform random parents instead of round-robin");
  synth_cmd->add_option("--out-data", synth_args.out_data, "dataset output path");
  synth_cmd->add_option("--out-graph", synth_args.out_graph, "graph output path");
  synth_cmd->add_option("--config", synth_config, "key=value file; command-line flags win");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train_cmd) {
      if (!train_config.empty()) apply_config_file(train_cmd, train_config);
      if (int rc = require_options(train_cmd, {"--graph", "--data", "--out"})) return rc;
      return run_train(train_args);
    }
    if (*eval_cmd) {
      if (!eval_config.empty()) apply_config_file(eval_cmd, eval_config);
      if (int rc = require_options(eval_cmd, {"--graph", "--data", "--model"})) return rc;
      return run_eval(eval_args);
    }
    if (*gc_cmd) {
      if (!gc_config.empty()) apply_config_file(gc_cmd, gc_config);
      return run_gradcheck(gc_args);
    }
    if (*bench_cmd) {
      if (!bench_config.empty()) apply_config_file(bench_cmd, bench_config);
      return run_bench(bench_args);
    }
    if (*synth_cmd) {
      if (!synth_config.empty()) apply_config_file(synth_cmd, synth_config);
      return run_synth(synth_args);
    }
  } catch (const bgl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
