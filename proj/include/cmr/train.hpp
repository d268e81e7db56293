#pragma once

#include <array>
#include <string>
#include <vector>

#include "cmr/config.hpp"
#include "cmr/gradcheck.hpp"
#include "cmr/model.hpp"

namespace cmr {

// Adam with bias correction. Moment slots are allocated against the model's
// named-parameter order.
class Adam {
 public:
  Adam(std::vector<TensorPtr> params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step();  // consumes .grad of every parameter; caller zeroes afterwards

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Scales all gradients so the global norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(const std::vector<TensorPtr>& params, double max_norm);
double global_grad_norm(const std::vector<TensorPtr>& params);

struct EvalReport {
  double micro = 0.0;
  double macro = 0.0;
  std::array<double, kDecisionCount> class_accuracy{};
  std::array<long, kDecisionCount> class_support{};
  double entail_accuracy = 0.0;
  long entail_total = 0;
  double span_exact_match = 0.0;
  double span_f1 = 0.0;
  long span_count = 0;  // examples where gold and prediction are both Inquire
  long example_count = 0;

  std::string to_table() const;
};

EvalReport evaluate(const ModelParams& params, const std::vector<Example>& dataset,
                    const ModelConfig& config);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_micro = 0.0;
  double dev_macro = 0.0;
  bool is_best = false;
};

struct TrainResult {
  ModelParams best;  // checkpoint with the best dev micro accuracy
  ModelParams last;  // parameters after the final epoch
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_dev_micro = -1.0;

  std::string log_text() const;  // fixed-format, byte-deterministic
};

TrainResult train(const TrainConfig& config, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set);

// ---- ablation harness ----

struct AblationVariant {
  std::string name;
  bool disable_explicit_graph = false;
  bool disable_implicit_graph = false;
  bool disable_rule_marker = false;
};

const std::vector<AblationVariant>& default_ablation_variants();

struct AblationRow {
  AblationVariant variant;
  std::vector<double> micro_per_seed;
  std::vector<double> macro_per_seed;
  double micro_mean = 0.0;
  double macro_mean = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::vector<std::uint64_t> seeds;

  std::string to_table() const;
  const AblationRow& row(const std::string& name) const;
};

// Trains one model per (variant, seed) with otherwise identical config and
// reports dev micro/macro means.
AblationReport run_ablation(const TrainConfig& base, const std::vector<Example>& train_set,
                            const std::vector<Example>& dev_set,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<std::uint64_t>& seeds);

// ---- gradient suite ----

// Two fixed hand-written examples (2 EDUs and 3 EDUs) that together exercise
// every parameter group: both graph paths, all edge types reachable, history
// and scenario pooling, all three entailment states, and the span head.
std::vector<Example> gradient_check_examples();

// Analytic-vs-central-difference check of the full training objective for
// every named parameter group on the given example.
std::vector<GradCheckReport> run_gradient_checks(const ModelParams& params, const Example& example,
                                                 const ModelConfig& config, double eps, double tol);

}  // namespace cmr
