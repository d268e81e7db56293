#pragma once

#include <vector>

#include "cmr/compute_graph.hpp"
#include "cmr/dataset.hpp"
#include "cmr/encoder.hpp"

namespace cmr {

struct DecoderParams {
  AttentionParams interaction;
  TensorPtr entail_weight;    // (d x 3)
  TensorPtr entail_bias;      // (1 x 3)
  TensorPtr alpha_weight;     // ((3+d) x 1)
  TensorPtr alpha_bias;       // (1 x 1)
  TensorPtr decision_weight;  // ((3+d) x 4)
  TensorPtr decision_bias;    // (1 x 4)
};

struct DecoderOutput {
  TensorPtr entail_logits;    // (n x 3)
  TensorPtr decision_logits;  // (1 x 4)
  TensorPtr attention;        // (1 x n), nonnegative, sums to 1
};

// One unmasked self-attention pass over the stacked element representations
// (rule EDUs, question, scenario, history turns). Arity and width preserved.
TensorPtr interaction_layer(ComputeGraph& g, const std::vector<TensorPtr>& inputs,
                            const AttentionParams& params);

// f_i = W_f r~_i + b_f
TensorPtr entailment_scores(ComputeGraph& g, const TensorPtr& edu_states, const DecoderParams& params);

// alpha_i = w_a^T [f_i; r~_i] + b_a,  alpha~ = softmax(alpha)
// z = W_z sum_i alpha~_i [f_i; r~_i] + b_z
DecoderOutput decision_scores(ComputeGraph& g, const TensorPtr& entail_logits,
                              const TensorPtr& edu_states, const DecoderParams& params);

struct LossComponents {
  TensorPtr total;     // decision + lambda * entail
  TensorPtr decision;  // -log softmax(z)[gold decision]
  TensorPtr entail;    // mean over EDUs of -log softmax(f_i)[gold state]
};

LossComponents compute_loss(ComputeGraph& g, const DecoderOutput& outputs,
                            const std::vector<EntailmentState>& gold_entailment,
                            Decision gold_decision, double lambda);

// Argmax with ties broken toward the lowest class index.
int argmax_row(const Tensor& t, int row);

}  // namespace cmr
