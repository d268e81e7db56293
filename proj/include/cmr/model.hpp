#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmr/compute_graph.hpp"
#include "cmr/dataset.hpp"
#include "cmr/decoder.hpp"
#include "cmr/encoder.hpp"
#include "cmr/span.hpp"

namespace cmr {

struct ModelConfig {
  int dim = 64;
  int gcn_layers = 2;
  int heads = 4;
  int max_seq_len = 256;
  double lambda = 1.0;            // entailment loss weight
  double span_loss_weight = 1.0;  // start/end loss weight on gold-Inquire examples
  SpanScoreMode span_mode = SpanScoreMode::Max;
  bool disable_explicit_graph = false;
  bool disable_implicit_graph = false;
  bool disable_rule_marker = false;

  EncodeOptions encode_options() const {
    return EncodeOptions{disable_explicit_graph, disable_implicit_graph, disable_rule_marker};
  }
};

// Every learnable tensor of the pipeline plus the vocabulary it was built
// against. named_parameters() enumerates the tensors in a fixed order; the
// optimizer, checkpoints and gradient checks all rely on that order.
struct ModelParams {
  int dim = 0;
  int gcn_layers = 0;
  int heads = 0;
  Vocabulary vocab;
  EncoderParams encoder;
  DecoderParams decoder;
  SpanParams span;

  static ModelParams init(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed);

  std::vector<std::pair<std::string, TensorPtr>> named_parameters() const;
  std::size_t parameter_count() const;
  void zero_grads() const;
  ModelParams clone() const;
};

struct ForwardResult {
  ComputeGraph tape;
  DecoderOutput decoder_out;
  EncoderOutput encoder_out;

  // Losses are set when the example carries gold labels and with_loss is
  // requested. objective = joint + span_loss_weight * span terms; joint is
  // decision + lambda * entailment.
  TensorPtr objective;
  TensorPtr joint_loss;
  double decision_loss_value = 0.0;
  double entail_loss_value = 0.0;
  double span_loss_value = 0.0;

  Decision predicted_decision = Decision::Yes;
  std::vector<EntailmentState> predicted_entailment;
  std::optional<SpanCandidate> predicted_span;
};

ForwardResult forward(const ModelParams& params, const Example& example, const ModelConfig& config,
                      bool with_loss);

}  // namespace cmr
