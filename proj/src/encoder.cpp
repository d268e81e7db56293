#include "cmr/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace cmr {

TensorPtr init_vertex_states(ComputeGraph& g, const LeviGraph& graph, const TensorPtr& rule_vectors,
                             const TensorPtr& scenario_vector, const EncoderParams& params) {
  if (rule_vectors->rows() != graph.edu_count) {
    throw std::invalid_argument("init_vertex_states: rule vector count does not match EDU count");
  }
  if (scenario_vector->rows() != 1 || scenario_vector->cols() != params.dim) {
    throw std::invalid_argument("init_vertex_states: scenario vector must be (1 x d)");
  }
  std::vector<TensorPtr> parts;
  parts.push_back(rule_vectors);
  std::vector<int> relation_rows;
  for (const auto& v : graph.vertices) {
    if (v.kind == VertexKind::RelationInstance) {
      relation_rows.push_back(static_cast<int>(v.relation));
    }
  }
  if (!relation_rows.empty()) {
    parts.push_back(g.gather_rows(params.relation_embedding, relation_rows));
  }
  parts.push_back(scenario_vector);
  return g.concat_rows(parts);
}

TensorPtr gcn_layer(ComputeGraph& g, const LeviGraph& graph, const TensorPtr& states,
                    const GcnLayerParams& params) {
  const int n = graph.vertex_count();
  if (states->rows() != n) {
    throw std::invalid_argument("gcn_layer: state rows do not match vertex count");
  }
  TensorPtr acc;
  for (int t = 0; t < kEdgeTypeCount; ++t) {
    std::vector<int> src, dst;
    for (const auto& e : graph.edges) {
      if (static_cast<int>(e.type) != t) continue;
      src.push_back(e.src);
      dst.push_back(e.dst);
    }
    if (src.empty()) continue;  // edge types with no instances contribute nothing

    std::vector<int> in_degree(n, 0);
    for (int v : dst) in_degree[v] += 1;
    std::vector<double> normalizer(src.size());
    for (std::size_t e = 0; e < dst.size(); ++e) normalizer[e] = 1.0 / in_degree[dst[e]];

    TensorPtr sender = g.gather_rows(states, src);
    TensorPtr gate = g.sigmoid(g.matmul(sender, params.gate[t]));
    TensorPtr message = g.mul_col_broadcast(g.matmul(sender, params.weight[t]), gate);
    message = g.scale_rows(message, std::move(normalizer));
    TensorPtr pooled = g.scatter_sum_rows(message, std::move(dst), n);
    acc = acc ? g.add(acc, pooled) : pooled;
  }
  if (!acc) acc = make_tensor({n, states->cols()}, 0.0);
  return g.relu(acc);
}

RuleMasks build_masks(const std::vector<int>& edu_index_of_rule_token) {
  const int s = static_cast<int>(edu_index_of_rule_token.size());
  if (s == 0) throw std::invalid_argument("build_masks: empty rule region");
  std::vector<double> local(static_cast<std::size_t>(s) * s);
  std::vector<double> context(static_cast<std::size_t>(s) * s);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      const bool same = edu_index_of_rule_token[i] == edu_index_of_rule_token[j];
      local[static_cast<std::size_t>(i) * s + j] = same ? 0.0 : kNegInf;
      context[static_cast<std::size_t>(i) * s + j] = same ? kNegInf : 0.0;
    }
  }
  return RuleMasks{MaskMatrix(s, s, std::move(local)), MaskMatrix(s, s, std::move(context))};
}

TensorPtr multi_head_attention(ComputeGraph& g, const TensorPtr& x, const MaskMatrix& mask,
                               const AttentionParams& params) {
  if (params.heads <= 0 || params.dim % params.heads != 0) {
    throw std::invalid_argument("multi_head_attention: dim must be divisible by head count");
  }
  if (x->cols() != params.dim) {
    throw std::invalid_argument("multi_head_attention: input width does not match parameters");
  }
  const double scaling = 1.0 / std::sqrt(static_cast<double>(params.head_dim()));
  std::vector<TensorPtr> head_outputs;
  for (int h = 0; h < params.heads; ++h) {
    TensorPtr q = g.matmul(x, params.query[h]);
    TensorPtr k = g.matmul(x, params.key[h]);
    TensorPtr v = g.matmul(x, params.value[h]);
    TensorPtr scores = g.scale(g.matmul(q, g.transpose(k)), scaling);
    TensorPtr attn = g.masked_softmax(scores, mask);
    head_outputs.push_back(g.matmul(attn, v));
  }
  return g.matmul(g.concat_cols(head_outputs), params.output);
}

TensorPtr gated_fuse(ComputeGraph& g, const TensorPtr& embeddings, const TensorPtr& local_view,
                     const TensorPtr& context_view, const FusionParams& params) {
  if (embeddings->shape != local_view->shape || embeddings->shape != context_view->shape) {
    throw std::invalid_argument("gated_fuse: input shapes disagree");
  }
  auto branch = [&](const TensorPtr& view, const TensorPtr& w, const TensorPtr& b) {
    TensorPtr cat =
        g.concat_cols({embeddings, view, g.sub(embeddings, view), g.mul(embeddings, view)});
    return g.relu(g.add_row_broadcast(g.matmul(cat, w), b));
  };
  TensorPtr e1 = branch(local_view, params.local_weight, params.local_bias);
  TensorPtr e2 = branch(context_view, params.context_weight, params.context_bias);
  TensorPtr gate =
      g.sigmoid(g.add_row_broadcast(g.matmul(g.concat_cols({e1, e2}), params.gate_weight), params.gate_bias));
  TensorPtr ones = make_tensor(gate->shape, 1.0);
  return g.add(g.mul(gate, local_view), g.mul(g.sub(ones, gate), context_view));
}

EncoderOutput encode(ComputeGraph& g, const TokenizedInput& layout, const TensorPtr& full_embeddings,
                     const TensorPtr& scenario_vector, const LeviGraph& graph,
                     const EncoderParams& params, const EncodeOptions& options) {
  const int n = graph.edu_count;
  const int total = layout.length();
  if (full_embeddings->rows() != total) {
    throw std::invalid_argument("encode: embedding rows do not match layout length");
  }

  std::vector<int> rule_rows;
  std::vector<int> rule_edu_index;
  for (int i = layout.rule_region_start; i < total; ++i) {
    rule_rows.push_back(i);
    rule_edu_index.push_back(layout.edu_index_of_token[i]);
  }
  TensorPtr rule_embeddings = g.gather_rows(full_embeddings, rule_rows);

  // Per-EDU readout rows, relative to the rule region. The marker row is the
  // default; the no-marker ablation pools the EDU's word tokens instead.
  auto readout = [&](const TensorPtr& source) {
    std::vector<TensorPtr> rows;
    for (int k = 0; k < n; ++k) {
      const Segment& words = layout.edu_word_spans[k];
      if (options.disable_rule_marker && words.length > 0) {
        std::vector<int> idx;
        for (int i = 0; i < words.length; ++i) {
          idx.push_back(words.start + i - layout.rule_region_start);
        }
        rows.push_back(g.mean_rows(g.gather_rows(source, idx)));
      } else {
        rows.push_back(
            g.gather_rows(source, {layout.rule_marker_positions[k] - layout.rule_region_start}));
      }
    }
    return g.concat_rows(rows);
  };

  EncoderOutput out;
  RuleMasks masks = build_masks(rule_edu_index);
  out.local_mask = masks.local;
  out.context_mask = masks.context;

  if (options.disable_implicit_graph) {
    out.fused = rule_embeddings;
  } else {
    TensorPtr local_view = implicit_encode(g, rule_embeddings, masks.local, params.attention);
    TensorPtr context_view = implicit_encode(g, rule_embeddings, masks.context, params.attention);
    out.fused = gated_fuse(g, rule_embeddings, local_view, context_view, params.fusion);
  }

  if (options.disable_explicit_graph) {
    out.explicit_edu = make_tensor({n, params.dim}, 0.0);
  } else {
    TensorPtr states = init_vertex_states(g, graph, readout(rule_embeddings), scenario_vector, params);
    for (int l = 0; l < params.gcn_layers; ++l) {
      states = gcn_layer(g, graph, states, params.gcn[l]);
    }
    std::vector<int> edu_vertices(n);
    for (int k = 0; k < n; ++k) edu_vertices[k] = graph.edu_vertex(k);
    out.explicit_edu = g.gather_rows(states, edu_vertices);
  }

  out.combined = g.add(out.explicit_edu, readout(out.fused));
  return out;
}

}  // namespace cmr
