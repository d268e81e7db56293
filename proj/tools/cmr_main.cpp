// Command-line surface for the conversational machine reading pipeline:
// synthetic data generation, training, evaluation, gradient checking, and
// dataset inspection (Levi graph dumps, relation statistics).

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cmr/checkpoint.hpp"
#include "cmr/config.hpp"
#include "cmr/dataset.hpp"
#include "cmr/levi_graph.hpp"
#include "cmr/span.hpp"
#include "cmr/synthetic.hpp"
#include "cmr/train.hpp"

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
}

int run_gen_data(const std::string& config_path, long seed, const std::string& out_path) {
  const cmr::KeyValueConfig cfg = config_path.empty() ? cmr::KeyValueConfig::from_string("")
                                                      : cmr::KeyValueConfig::from_file(config_path);
  const cmr::GeneratorConfig gc = cmr::generator_config_from(cfg);
  const auto dataset = cmr::generate_synthetic(gc, static_cast<std::uint64_t>(seed));
  cmr::save_dataset(out_path, dataset);
  std::cout << "wrote " << dataset.size() << " examples to " << out_path << "\n";
  return 0;
}

int run_train(const std::string& config_path, const std::string& train_path,
              const std::string& dev_path, const std::string& ckpt_path, const std::string& log_path) {
  const cmr::KeyValueConfig cfg = cmr::KeyValueConfig::from_file(config_path);
  const cmr::TrainConfig tc = cmr::TrainConfig::from_config(cfg);
  const auto train_set = cmr::load_dataset(train_path);
  const auto dev_set = cmr::load_dataset(dev_path);
  const cmr::TrainResult result = cmr::train(tc, train_set, dev_set);
  cmr::save_checkpoint(ckpt_path, result.best, cfg.fingerprint());
  const std::string log = result.log_text();
  if (!log_path.empty()) write_text(log_path, log);
  std::cout << log;
  std::cout << "saved best checkpoint (epoch " << result.best_epoch << ") to " << ckpt_path << "\n";
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& report_path) {
  const cmr::Checkpoint ckpt = cmr::load_checkpoint(ckpt_path);
  const auto dataset = cmr::load_dataset(data_path);
  cmr::ModelConfig mc;
  mc.dim = ckpt.params.dim;
  mc.gcn_layers = ckpt.params.gcn_layers;
  mc.heads = ckpt.params.heads;
  const cmr::EvalReport report = cmr::evaluate(ckpt.params, dataset, mc);
  const std::string table = report.to_table();
  if (!report_path.empty()) write_text(report_path, table);
  std::cout << table;
  return 0;
}

int run_grad_check(const std::string& ckpt_path, bool random_params, double tol, double eps) {
  cmr::ModelConfig mc;
  cmr::ModelParams params;
  const auto examples = cmr::gradient_check_examples();
  if (random_params || ckpt_path.empty()) {
    mc.dim = 16;
    mc.heads = 2;
    mc.gcn_layers = 2;
    params = cmr::ModelParams::init(mc, cmr::build_vocabulary(examples), 7);
  } else {
    const cmr::Checkpoint ckpt = cmr::load_checkpoint(ckpt_path);
    params = ckpt.params;
    mc.dim = params.dim;
    mc.gcn_layers = params.gcn_layers;
    mc.heads = params.heads;
  }

  bool all_ok = true;
  for (const auto& ex : examples) {
    std::cout << "example " << ex.example_id << " (" << ex.rule_edus.size() << " EDUs)\n";
    for (const auto& report : cmr::run_gradient_checks(params, ex, mc, eps, tol)) {
      std::printf("  %-36s max_rel_err %.3e %s\n", report.name.c_str(), report.max_rel_error,
                  report.passed ? "ok" : "FAIL");
      all_ok &= report.passed;
    }
  }
  std::cout << (all_ok ? "gradient check passed" : "gradient check FAILED") << " (tol " << tol << ")\n";
  return all_ok ? 0 : 1;
}

int run_graph(const std::string& data_path, long index, const std::string& out_path) {
  const auto dataset = cmr::load_dataset(data_path);
  if (index < 0 || index >= static_cast<long>(dataset.size())) {
    throw std::runtime_error("example index out of range (dataset has " +
                             std::to_string(dataset.size()) + " examples)");
  }
  const cmr::Example& ex = dataset[index];
  const cmr::LeviGraph graph =
      cmr::build_levi_graph(static_cast<int>(ex.rule_edus.size()), ex.relation_links);
  const std::string dump = cmr::serialize_graph(graph);
  if (!out_path.empty()) write_text(out_path, dump);
  std::cout << dump;
  return 0;
}

int run_stats(const std::string& data_path) {
  const auto dataset = cmr::load_dataset(data_path);
  std::cout << "examples: " << dataset.size() << "\n";
  std::cout << cmr::format_relation_histogram(cmr::relation_histogram(dataset));
  return 0;
}

int run_ablate(const std::string& config_path, const std::string& train_path,
               const std::string& dev_path, const std::string& seeds_csv,
               const std::string& report_path) {
  const cmr::KeyValueConfig cfg = cmr::KeyValueConfig::from_file(config_path);
  const cmr::TrainConfig tc = cmr::TrainConfig::from_config(cfg);
  const auto train_set = cmr::load_dataset(train_path);
  const auto dev_set = cmr::load_dataset(dev_path);
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(seeds_csv);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
  if (seeds.empty()) seeds.push_back(tc.seed);
  const cmr::AblationReport report =
      cmr::run_ablation(tc, train_set, dev_set, cmr::default_ablation_variants(), seeds);
  const std::string table = report.to_table();
  if (!report_path.empty()) write_text(report_path, table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conversational machine reading over discourse graphs"};
  app.require_subcommand(1);

  std::string config_path, train_path, dev_path, data_path, ckpt_path, out_path, report_path,
      log_path, seeds_csv;
  long seed = 0, index = 0;
  double tol = 1e-4, eps = 1e-5;
  bool random_params = false;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--config", config_path, "generator config file");
  gen->add_option("--seed", seed, "generator seed")->required();
  gen->add_option("--out", out_path, "output JSONL path")->required();

  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", config_path, "training config file")->required();
  train_cmd->add_option("--train", train_path, "training JSONL")->required();
  train_cmd->add_option("--dev", dev_path, "dev JSONL")->required();
  train_cmd->add_option("--out", ckpt_path, "checkpoint output path")->required();
  train_cmd->add_option("--log", log_path, "metrics log output path");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  eval_cmd->add_option("--data", data_path, "dataset JSONL")->required();
  eval_cmd->add_option("--report", report_path, "write the report table here");

  auto* grad = app.add_subcommand("grad-check", "finite-difference gradient check");
  grad->add_option("--ckpt", ckpt_path, "checkpoint path");
  grad->add_flag("--random", random_params, "use a small randomly initialized model");
  grad->add_option("--tol", tol, "maximum relative error");
  grad->add_option("--eps", eps, "finite difference step");

  auto* graph_cmd = app.add_subcommand("graph", "dump the Levi graph of one example");
  graph_cmd->add_option("--data", data_path, "dataset JSONL")->required();
  graph_cmd->add_option("--index", index, "example index")->required();
  graph_cmd->add_option("--out", out_path, "write the dump here");

  auto* stats = app.add_subcommand("stats", "relation-type histogram of a dataset");
  stats->add_option("--data", data_path, "dataset JSONL")->required();

  auto* ablate = app.add_subcommand("ablate", "train and compare ablation variants");
  ablate->add_option("--config", config_path, "training config file")->required();
  ablate->add_option("--train", train_path, "training JSONL")->required();
  ablate->add_option("--dev", dev_path, "dev JSONL")->required();
  ablate->add_option("--seeds", seeds_csv, "comma-separated seeds");
  ablate->add_option("--report", report_path, "write the table here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_data(config_path, seed, out_path);
    if (train_cmd->parsed()) return run_train(config_path, train_path, dev_path, ckpt_path, log_path);
    if (eval_cmd->parsed()) return run_eval(ckpt_path, data_path, report_path);
    if (grad->parsed()) return run_grad_check(ckpt_path, random_params, tol, eps);
    if (graph_cmd->parsed()) return run_graph(data_path, index, out_path);
    if (stats->parsed()) return run_stats(data_path);
    if (ablate->parsed()) return run_ablate(config_path, train_path, dev_path, seeds_csv, report_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
