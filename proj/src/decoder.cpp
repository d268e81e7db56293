#include "cmr/decoder.hpp"

#include <stdexcept>

namespace cmr {

TensorPtr interaction_layer(ComputeGraph& g, const std::vector<TensorPtr>& inputs,
                            const AttentionParams& params) {
  if (inputs.empty()) throw std::invalid_argument("interaction_layer: empty input list");
  TensorPtr stacked = inputs.size() == 1 ? inputs[0] : g.concat_rows(inputs);
  return multi_head_attention(g, stacked, MaskMatrix::all_visible(stacked->rows(), stacked->rows()),
                              params);
}

TensorPtr entailment_scores(ComputeGraph& g, const TensorPtr& edu_states, const DecoderParams& params) {
  return g.add_row_broadcast(g.matmul(edu_states, params.entail_weight), params.entail_bias);
}

DecoderOutput decision_scores(ComputeGraph& g, const TensorPtr& entail_logits,
                              const TensorPtr& edu_states, const DecoderParams& params) {
  const int n = edu_states->rows();
  if (entail_logits->rows() != n) {
    throw std::invalid_argument("decision_scores: entailment and state row counts disagree");
  }
  if (n < 1) throw std::invalid_argument("decision_scores: at least one EDU required");

  DecoderOutput out;
  out.entail_logits = entail_logits;
  TensorPtr features = g.concat_cols({entail_logits, edu_states});  // (n x (3+d))
  TensorPtr alpha = g.add_row_broadcast(g.matmul(features, params.alpha_weight), params.alpha_bias);
  out.attention = g.softmax_rows(g.reshape(alpha, {1, n}));
  TensorPtr pooled = g.matmul(out.attention, features);  // (1 x (3+d))
  out.decision_logits = g.add_row_broadcast(g.matmul(pooled, params.decision_weight), params.decision_bias);
  return out;
}

LossComponents compute_loss(ComputeGraph& g, const DecoderOutput& outputs,
                            const std::vector<EntailmentState>& gold_entailment,
                            Decision gold_decision, double lambda) {
  const int n = outputs.entail_logits->rows();
  if (static_cast<int>(gold_entailment.size()) != n) {
    throw std::invalid_argument("compute_loss: gold entailment count does not match EDU count");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("compute_loss: lambda must be nonnegative");

  std::vector<int> targets(n);
  for (int i = 0; i < n; ++i) targets[i] = static_cast<int>(gold_entailment[i]);

  LossComponents loss;
  loss.entail = g.cross_entropy_rows(outputs.entail_logits, std::move(targets));
  loss.decision = g.cross_entropy_rows(outputs.decision_logits, {static_cast<int>(gold_decision)});
  loss.total = lambda == 0.0 ? loss.decision : g.add(loss.decision, g.scale(loss.entail, lambda));
  return loss;
}

int argmax_row(const Tensor& t, int row) {
  int best = 0;
  for (int j = 1; j < t.cols(); ++j) {
    if (t.at(row, j) > t.at(row, best)) best = j;
  }
  return best;
}

}  // namespace cmr
