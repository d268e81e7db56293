#include "cmr/model.hpp"

#include <cmath>
#include <stdexcept>

#include "cmr/rng.hpp"

namespace cmr {

namespace {

TensorPtr init_matrix(Pcg32& rng, int rows, int cols, double stddev) {
  auto t = make_tensor({rows, cols}, 0.0, true);
  if (stddev > 0.0) {
    for (auto& v : t->data) v = stddev * rng.next_normal();
  }
  return t;
}

TensorPtr init_xavier(Pcg32& rng, int rows, int cols) {
  return init_matrix(rng, rows, cols, std::sqrt(2.0 / (rows + cols)));
}

AttentionParams init_attention(Pcg32& rng, int dim, int heads) {
  AttentionParams attn;
  attn.dim = dim;
  attn.heads = heads;
  const int hd = dim / heads;
  for (int h = 0; h < heads; ++h) {
    attn.query.push_back(init_xavier(rng, dim, hd));
    attn.key.push_back(init_xavier(rng, dim, hd));
    attn.value.push_back(init_xavier(rng, dim, hd));
  }
  attn.output = init_xavier(rng, dim, dim);
  return attn;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed) {
  if (config.dim <= 0 || config.heads <= 0 || config.dim % config.heads != 0) {
    throw std::invalid_argument("model dimension must be positive and divisible by the head count");
  }
  if (config.gcn_layers <= 0) throw std::invalid_argument("at least one message-passing layer required");

  Pcg32 rng(seed, 0x8d1f7a2b5c3e9041ULL);
  ModelParams p;
  p.dim = config.dim;
  p.gcn_layers = config.gcn_layers;
  p.heads = config.heads;
  p.vocab = vocab;

  const int d = config.dim;
  p.encoder.dim = d;
  p.encoder.gcn_layers = config.gcn_layers;
  p.encoder.token_embedding = init_matrix(rng, vocab.size(), d, 0.3);
  p.encoder.relation_embedding = init_matrix(rng, kRelationTypeCount, d, 0.3);
  for (int l = 0; l < config.gcn_layers; ++l) {
    GcnLayerParams layer;
    for (int t = 0; t < kEdgeTypeCount; ++t) {
      layer.weight[t] = init_xavier(rng, d, d);
      layer.gate[t] = make_tensor({d, 1}, 0.0, true);  // sigmoid(0) = 0.5, neutral gate
    }
    p.encoder.gcn.push_back(layer);
  }
  p.encoder.attention = init_attention(rng, d, config.heads);
  p.encoder.fusion.local_weight = init_xavier(rng, 4 * d, d);
  p.encoder.fusion.local_bias = make_tensor({1, d}, 0.0, true);
  p.encoder.fusion.context_weight = init_xavier(rng, 4 * d, d);
  p.encoder.fusion.context_bias = make_tensor({1, d}, 0.0, true);
  p.encoder.fusion.gate_weight = init_xavier(rng, 2 * d, d);
  p.encoder.fusion.gate_bias = make_tensor({1, d}, 0.0, true);

  p.decoder.interaction = init_attention(rng, d, config.heads);
  p.decoder.entail_weight = init_xavier(rng, d, kEntailmentStateCount);
  p.decoder.entail_bias = make_tensor({1, kEntailmentStateCount}, 0.0, true);
  p.decoder.alpha_weight = init_xavier(rng, kEntailmentStateCount + d, 1);
  p.decoder.alpha_bias = make_tensor({1, 1}, 0.0, true);
  p.decoder.decision_weight = init_xavier(rng, kEntailmentStateCount + d, kDecisionCount);
  p.decoder.decision_bias = make_tensor({1, kDecisionCount}, 0.0, true);

  p.span.start_vector = init_matrix(rng, d, 1, 0.2);
  p.span.end_vector = init_matrix(rng, d, 1, 0.2);
  return p;
}

std::vector<std::pair<std::string, TensorPtr>> ModelParams::named_parameters() const {
  std::vector<std::pair<std::string, TensorPtr>> out;
  out.emplace_back("token_embedding", encoder.token_embedding);
  out.emplace_back("relation_embedding", encoder.relation_embedding);
  for (int l = 0; l < gcn_layers; ++l) {
    for (int t = 0; t < kEdgeTypeCount; ++t) {
      const std::string base = "gcn.layer" + std::to_string(l) + "." + to_string(static_cast<EdgeType>(t));
      out.emplace_back(base + ".weight", encoder.gcn[l].weight[t]);
      out.emplace_back(base + ".gate", encoder.gcn[l].gate[t]);
    }
  }
  auto add_attention = [&](const std::string& base, const AttentionParams& attn) {
    for (int h = 0; h < attn.heads; ++h) {
      const std::string head = base + ".head" + std::to_string(h);
      out.emplace_back(head + ".query", attn.query[h]);
      out.emplace_back(head + ".key", attn.key[h]);
      out.emplace_back(head + ".value", attn.value[h]);
    }
    out.emplace_back(base + ".output", attn.output);
  };
  add_attention("encoder.attention", encoder.attention);
  out.emplace_back("fusion.local.weight", encoder.fusion.local_weight);
  out.emplace_back("fusion.local.bias", encoder.fusion.local_bias);
  out.emplace_back("fusion.context.weight", encoder.fusion.context_weight);
  out.emplace_back("fusion.context.bias", encoder.fusion.context_bias);
  out.emplace_back("fusion.gate.weight", encoder.fusion.gate_weight);
  out.emplace_back("fusion.gate.bias", encoder.fusion.gate_bias);
  add_attention("interaction", decoder.interaction);
  out.emplace_back("entail.weight", decoder.entail_weight);
  out.emplace_back("entail.bias", decoder.entail_bias);
  out.emplace_back("alpha.weight", decoder.alpha_weight);
  out.emplace_back("alpha.bias", decoder.alpha_bias);
  out.emplace_back("decision.weight", decoder.decision_weight);
  out.emplace_back("decision.bias", decoder.decision_bias);
  out.emplace_back("span.start", span.start_vector);
  out.emplace_back("span.end", span.end_vector);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t->size();
  return n;
}

void ModelParams::zero_grads() const {
  for (const auto& [name, t] : named_parameters()) t->zero_grad();
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  auto deep = [](TensorPtr& t) {
    auto fresh = std::make_shared<Tensor>(*t);
    t = fresh;
  };
  deep(copy.encoder.token_embedding);
  deep(copy.encoder.relation_embedding);
  for (auto& layer : copy.encoder.gcn) {
    for (auto& w : layer.weight) deep(w);
    for (auto& w : layer.gate) deep(w);
  }
  auto deep_attention = [&](AttentionParams& attn) {
    for (auto& w : attn.query) deep(w);
    for (auto& w : attn.key) deep(w);
    for (auto& w : attn.value) deep(w);
    deep(attn.output);
  };
  deep_attention(copy.encoder.attention);
  deep(copy.encoder.fusion.local_weight);
  deep(copy.encoder.fusion.local_bias);
  deep(copy.encoder.fusion.context_weight);
  deep(copy.encoder.fusion.context_bias);
  deep(copy.encoder.fusion.gate_weight);
  deep(copy.encoder.fusion.gate_bias);
  deep_attention(copy.decoder.interaction);
  deep(copy.decoder.entail_weight);
  deep(copy.decoder.entail_bias);
  deep(copy.decoder.alpha_weight);
  deep(copy.decoder.alpha_bias);
  deep(copy.decoder.decision_weight);
  deep(copy.decoder.decision_bias);
  deep(copy.span.start_vector);
  deep(copy.span.end_vector);
  return copy;
}

namespace {

// Mean-pooled embedding of a token segment; the zero vector when empty.
TensorPtr pool_segment(ComputeGraph& g, const TensorPtr& embeddings, const Segment& segment, int dim) {
  if (segment.length == 0) return make_tensor({1, dim}, 0.0);
  std::vector<int> rows(segment.length);
  for (int i = 0; i < segment.length; ++i) rows[i] = segment.start + i;
  return g.mean_rows(g.gather_rows(embeddings, std::move(rows)));
}

}  // namespace

ForwardResult forward(const ModelParams& params, const Example& example, const ModelConfig& config,
                      bool with_loss) {
  validate_example(example);
  const int n = static_cast<int>(example.rule_edus.size());

  ForwardResult res;
  ComputeGraph& g = res.tape;

  const TokenizedInput layout = layout_sequence(example, params.vocab, config.max_seq_len);
  TensorPtr embeddings = g.gather_rows(params.encoder.token_embedding, layout.token_ids);

  TensorPtr question_vec = pool_segment(g, embeddings, layout.question, params.dim);
  TensorPtr scenario_vec = pool_segment(g, embeddings, layout.scenario, params.dim);
  std::vector<TensorPtr> history_vecs;
  for (const auto& seg : layout.history) {
    history_vecs.push_back(pool_segment(g, embeddings, seg, params.dim));
  }

  const LeviGraph levi = build_levi_graph(n, example.relation_links);
  res.encoder_out =
      encode(g, layout, embeddings, scenario_vec, levi, params.encoder, config.encode_options());

  std::vector<TensorPtr> interaction_inputs = {res.encoder_out.combined, question_vec, scenario_vec};
  for (const auto& h : history_vecs) interaction_inputs.push_back(h);
  TensorPtr interacted = interaction_layer(g, interaction_inputs, params.decoder.interaction);
  std::vector<int> edu_rows(n);
  for (int k = 0; k < n; ++k) edu_rows[k] = k;
  TensorPtr edu_states = g.gather_rows(interacted, edu_rows);

  TensorPtr entail = entailment_scores(g, edu_states, params.decoder);
  res.decoder_out = decision_scores(g, entail, edu_states, params.decoder);

  res.predicted_decision = static_cast<Decision>(argmax_row(*res.decoder_out.decision_logits, 0));
  for (int k = 0; k < n; ++k) {
    res.predicted_entailment.push_back(
        static_cast<EntailmentState>(argmax_row(*res.decoder_out.entail_logits, k)));
  }

  // Span scoring over the fused rule representations at word-token rows.
  std::vector<TensorPtr> edu_token_reps(n);
  std::vector<TensorPtr> nonempty_reps;
  std::vector<int> edu_of_nonempty;
  for (int k = 0; k < n; ++k) {
    const Segment& words = layout.edu_word_spans[k];
    if (words.length == 0) continue;
    std::vector<int> rows(words.length);
    for (int i = 0; i < words.length; ++i) rows[i] = words.start + i - layout.rule_region_start;
    edu_token_reps[k] = g.gather_rows(res.encoder_out.fused, std::move(rows));
    nonempty_reps.push_back(edu_token_reps[k]);
    edu_of_nonempty.push_back(k);
  }
  if (!nonempty_reps.empty()) {
    SpanCandidate local = extract_span(nonempty_reps, params.span, config.span_mode);
    local.edu = edu_of_nonempty[local.edu];
    res.predicted_span = local;
  }

  const bool have_gold = !example.gold_entailment.empty();
  if (with_loss && have_gold) {
    LossComponents loss = compute_loss(g, res.decoder_out, example.gold_entailment,
                                       example.gold_decision, config.lambda);
    res.joint_loss = loss.total;
    res.decision_loss_value = loss.decision->data[0];
    res.entail_loss_value = loss.entail->data[0];
    res.objective = loss.total;

    if (config.span_loss_weight > 0.0 && example.gold_decision == Decision::Inquire &&
        example.gold_span && !nonempty_reps.empty()) {
      // Flatten word tokens across EDUs; the gold (edu, offset) becomes one
      // class index for a start softmax and one for an end softmax.
      int gold_start = -1, gold_end = -1, offset = 0;
      for (std::size_t idx = 0; idx < nonempty_reps.size(); ++idx) {
        const int k = edu_of_nonempty[idx];
        const int len = nonempty_reps[idx]->rows();
        if (k == example.gold_span->edu) {
          if (example.gold_span->end < len) {
            gold_start = offset + example.gold_span->start;
            gold_end = offset + example.gold_span->end;
          }
        }
        offset += len;
      }
      if (gold_start >= 0) {
        TensorPtr words = nonempty_reps.size() == 1 ? nonempty_reps[0] : g.concat_rows(nonempty_reps);
        TensorPtr start_logits = g.reshape(g.matmul(words, params.span.start_vector), {1, offset});
        TensorPtr end_logits = g.reshape(g.matmul(words, params.span.end_vector), {1, offset});
        TensorPtr span_loss = g.add(g.cross_entropy_rows(start_logits, {gold_start}),
                                    g.cross_entropy_rows(end_logits, {gold_end}));
        res.span_loss_value = span_loss->data[0];
        res.objective = g.add(res.objective, g.scale(span_loss, config.span_loss_weight));
      }
    }
  }
  return res;
}

}  // namespace cmr
