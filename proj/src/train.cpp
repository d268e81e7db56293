#include "cmr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "cmr/rng.hpp"

namespace cmr {

Adam::Adam(std::vector<TensorPtr> params, double learning_rate, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    first_.emplace_back(p->size(), 0.0);
    second_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double correction1 = 1.0 - std::pow(beta1_, t_);
  const double correction2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = *params_[k];
    p.ensure_grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      first_[k][i] = beta1_ * first_[k][i] + (1.0 - beta1_) * g;
      second_[k][i] = beta2_ * second_[k][i] + (1.0 - beta2_) * g * g;
      const double m_hat = first_[k][i] / correction1;
      const double v_hat = second_[k][i] / correction2;
      p.data[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

double global_grad_norm(const std::vector<TensorPtr>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p->has_grad()) continue;
    for (double g : p->grad) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_global_norm(const std::vector<TensorPtr>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (const auto& p : params) {
      if (!p->has_grad()) continue;
      for (double& g : p->grad) g *= factor;
    }
  }
  return norm;
}

namespace {

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << "decision evaluation over " << example_count << " examples\n";
  os << "class        support  accuracy\n";
  static const char* names[kDecisionCount] = {"yes", "no", "inquire", "irrelevant"};
  for (int c = 0; c < kDecisionCount; ++c) {
    char line[80];
    std::snprintf(line, sizeof(line), "%-12s %7ld  %s\n", names[c], class_support[c],
                  class_support[c] > 0 ? format_rate(class_accuracy[c]).c_str() : "-");
    os << line;
  }
  os << "micro " << format_rate(micro) << "  macro " << format_rate(macro) << "\n";
  if (entail_total > 0) {
    os << "entailment accuracy " << format_rate(entail_accuracy) << " over " << entail_total
       << " EDU labels\n";
  }
  os << "span (both inquire, " << span_count << " examples): EM " << format_rate(span_exact_match)
     << "  F1 " << format_rate(span_f1) << "\n";
  return os.str();
}

EvalReport evaluate(const ModelParams& params, const std::vector<Example>& dataset,
                    const ModelConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  EvalReport report;
  report.example_count = static_cast<long>(dataset.size());

  std::array<long, kDecisionCount> correct{};
  long entail_correct = 0;
  std::vector<SpanCandidate> span_preds, span_golds;

  for (const auto& ex : dataset) {
    ForwardResult res = forward(params, ex, config, /*with_loss=*/false);
    const int gold_class = static_cast<int>(ex.gold_decision);
    report.class_support[gold_class] += 1;
    if (res.predicted_decision == ex.gold_decision) correct[gold_class] += 1;

    if (!ex.gold_entailment.empty()) {
      for (std::size_t k = 0; k < ex.gold_entailment.size(); ++k) {
        report.entail_total += 1;
        if (res.predicted_entailment[k] == ex.gold_entailment[k]) entail_correct += 1;
      }
    }
    if (ex.gold_decision == Decision::Inquire && res.predicted_decision == Decision::Inquire &&
        ex.gold_span && res.predicted_span) {
      span_preds.push_back(*res.predicted_span);
      span_golds.push_back(SpanCandidate{ex.gold_span->edu, ex.gold_span->start, ex.gold_span->end, 0.0});
    }
  }

  long total_correct = 0;
  double macro_sum = 0.0;
  int classes_present = 0;
  for (int c = 0; c < kDecisionCount; ++c) {
    total_correct += correct[c];
    if (report.class_support[c] > 0) {
      report.class_accuracy[c] = static_cast<double>(correct[c]) / report.class_support[c];
      macro_sum += report.class_accuracy[c];
      ++classes_present;
    }
  }
  report.micro = static_cast<double>(total_correct) / report.example_count;
  // Macro averages only over classes present in the gold labels.
  report.macro = classes_present > 0 ? macro_sum / classes_present : 0.0;
  report.entail_accuracy =
      report.entail_total > 0 ? static_cast<double>(entail_correct) / report.entail_total : 0.0;
  report.span_count = static_cast<long>(span_preds.size());
  if (!span_preds.empty()) {
    const SpanMetrics sm = span_metrics(span_preds, span_golds);
    report.span_exact_match = sm.exact_match;
    report.span_f1 = sm.token_f1;
  }
  return report;
}

std::string TrainResult::log_text() const {
  std::ostringstream os;
  for (const auto& e : log) {
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %d train_loss %.17g dev_micro %.17g dev_macro %.17g%s\n",
                  e.epoch, e.train_loss, e.dev_micro, e.dev_macro, e.is_best ? " *" : "");
    os << line;
  }
  char tail[96];
  std::snprintf(tail, sizeof(tail), "best_epoch %d best_dev_micro %.17g\n", best_epoch, best_dev_micro);
  os << tail;
  return os.str();
}

TrainResult train(const TrainConfig& config, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (dev_set.empty()) throw std::invalid_argument("train: empty dev set");

  const Vocabulary vocab = build_vocabulary(train_set);
  ModelParams params = ModelParams::init(config.model, vocab, config.seed);
  std::vector<TensorPtr> tensors;
  for (auto& [name, t] : params.named_parameters()) tensors.push_back(t);
  Adam optimizer(tensors, config.learning_rate);
  Pcg32 shuffle_rng(config.seed, 0x5851f42d4c957f2dULL);

  TrainResult result;
  result.best = params.clone();

  std::vector<int> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    params.zero_grads();
    double loss_sum = 0.0;
    long seen = 0;
    int batch_index = 0;

    for (std::size_t pos = 0; pos < order.size(); pos += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), pos + config.batch_size);
      const int batch = static_cast<int>(end - pos);
      for (std::size_t i = pos; i < end; ++i) {
        const Example& ex = train_set[order[i]];
        ForwardResult res = forward(params, ex, config.model, /*with_loss=*/true);
        if (!res.objective) {
          throw std::runtime_error("train: example " + ex.example_id + " carries no gold labels");
        }
        const double value = res.objective->data[0];
        if (!std::isfinite(value)) {
          throw std::runtime_error("train: non-finite loss in epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(batch_index));
        }
        loss_sum += value;
        res.tape.backward(res.objective, 1.0 / batch);
      }
      seen += batch;

      clip_global_norm(tensors, config.clip_norm);
      // Clip invariant, kept live in release builds.
      const double post_clip = global_grad_norm(tensors);
      if (post_clip > config.clip_norm * (1.0 + 1e-9) + 1e-12) {
        throw std::logic_error("train: post-clip gradient norm exceeds the configured maximum");
      }
      optimizer.step();
      params.zero_grads();
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / seen;
    const EvalReport dev = evaluate(params, dev_set, config.model);
    entry.dev_micro = dev.micro;
    entry.dev_macro = dev.macro;
    if (dev.micro > result.best_dev_micro) {
      result.best_dev_micro = dev.micro;
      result.best_epoch = epoch;
      result.best = params.clone();
      entry.is_best = true;
    }
    result.log.push_back(entry);
    if (config.early_stop_dev_micro > 0.0 && dev.micro >= config.early_stop_dev_micro) break;
  }
  result.last = std::move(params);
  return result;
}

const std::vector<AblationVariant>& default_ablation_variants() {
  static const std::vector<AblationVariant> variants = {
      {"full", false, false, false},
      {"no-explicit-graph", true, false, false},
      {"no-implicit-graph", false, true, false},
      {"no-rule-marker", false, false, true},
      {"no-both-graphs", true, true, false},
  };
  return variants;
}

std::string AblationReport::to_table() const {
  std::ostringstream os;
  os << "variant                micro    macro   (mean over " << seeds.size() << " seeds)\n";
  for (const auto& row : rows) {
    char line[120];
    std::snprintf(line, sizeof(line), "%-20s %8.4f %8.4f\n", row.variant.name.c_str(), row.micro_mean,
                  row.macro_mean);
    os << line;
  }
  return os.str();
}

const AblationRow& AblationReport::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.variant.name == name) return r;
  }
  throw std::invalid_argument("ablation report has no variant named " + name);
}

AblationReport run_ablation(const TrainConfig& base, const std::vector<Example>& train_set,
                            const std::vector<Example>& dev_set,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<std::uint64_t>& seeds) {
  if (variants.empty() || seeds.empty()) {
    throw std::invalid_argument("run_ablation: variants and seeds must be nonempty");
  }
  AblationReport report;
  report.seeds = seeds;
  for (const auto& variant : variants) {
    AblationRow row;
    row.variant = variant;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.seed = seed;
      cfg.model.disable_explicit_graph = variant.disable_explicit_graph;
      cfg.model.disable_implicit_graph = variant.disable_implicit_graph;
      cfg.model.disable_rule_marker = variant.disable_rule_marker;
      TrainResult tr = train(cfg, train_set, dev_set);
      const EvalReport dev = evaluate(tr.best, dev_set, cfg.model);
      row.micro_per_seed.push_back(dev.micro);
      row.macro_per_seed.push_back(dev.macro);
      row.micro_mean += dev.micro;
      row.macro_mean += dev.macro;
    }
    row.micro_mean /= seeds.size();
    row.macro_mean /= seeds.size();
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<Example> gradient_check_examples() {
  std::vector<Example> out;

  Example a;
  a.example_id = "gradcheck-2edu";
  a.tree_id = "gradcheck";
  a.rule_edus = {split_tokens("applicants for the loan must be resident"),
                 split_tokens("you must be employed")};
  a.relation_links = {DiscourseLink{0, 1, RelationType::Continuation}};
  a.question = split_tokens("am i eligible for the loan");
  a.scenario = split_tokens("situation has_resident");
  a.history = {HistoryTurn{split_tokens("are you employed"), false}};
  a.gold_entailment = {EntailmentState::Entailment, EntailmentState::Contradiction};
  a.gold_decision = Decision::No;
  out.push_back(a);

  Example b;
  b.example_id = "gradcheck-3edu";
  b.tree_id = "gradcheck";
  b.rule_edus = {split_tokens("applicants for the permit must be student"),
                 split_tokens("you must be veteran"), split_tokens("you must be married")};
  b.relation_links = {DiscourseLink{0, 1, RelationType::Conditional},
                      DiscourseLink{1, 2, RelationType::Alternation}};
  b.question = split_tokens("do i qualify for the permit");
  b.scenario = split_tokens("situation has_veteran");
  b.history = {HistoryTurn{split_tokens("are you married"), false}};
  b.gold_entailment = {EntailmentState::Unmentioned, EntailmentState::Entailment,
                       EntailmentState::Contradiction};
  b.gold_decision = Decision::Inquire;
  b.gold_span = GoldSpan{0, 0, 6};
  out.push_back(b);

  return out;
}

std::vector<GradCheckReport> run_gradient_checks(const ModelParams& params, const Example& example,
                                                 const ModelConfig& config, double eps, double tol) {
  // Analytic pass.
  params.zero_grads();
  {
    ForwardResult res = forward(params, example, config, /*with_loss=*/true);
    if (!res.objective) throw std::invalid_argument("run_gradient_checks: example has no gold labels");
    res.tape.backward(res.objective);
  }
  auto objective = [&]() {
    ForwardResult res = forward(params, example, config, /*with_loss=*/true);
    return res.objective->data[0];
  };
  std::vector<GradCheckReport> reports;
  for (const auto& [name, tensor] : params.named_parameters()) {
    reports.push_back(check_gradients(name, objective, *tensor, eps, tol));
  }
  params.zero_grads();
  return reports;
}

}  // namespace cmr
