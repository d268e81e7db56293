#pragma once

#include <array>
#include <vector>

#include "cmr/compute_graph.hpp"
#include "cmr/dataset.hpp"
#include "cmr/levi_graph.hpp"
#include "cmr/tensor.hpp"

namespace cmr {

// Multi-head self-attention with per-head projections and a shared output
// projection; no biases and no positional terms, so the layer is permutation
// equivariant.
struct AttentionParams {
  int dim = 0;
  int heads = 0;
  std::vector<TensorPtr> query;  // per head, (d x d/heads)
  std::vector<TensorPtr> key;
  std::vector<TensorPtr> value;
  TensorPtr output;  // (d x d)

  int head_dim() const { return dim / heads; }
};

struct GcnLayerParams {
  std::array<TensorPtr, kEdgeTypeCount> weight;  // per edge type, (d x d)
  std::array<TensorPtr, kEdgeTypeCount> gate;    // per edge type, (d x 1)
};

struct FusionParams {
  TensorPtr local_weight;    // (4d x d)
  TensorPtr local_bias;      // (1 x d)
  TensorPtr context_weight;  // (4d x d)
  TensorPtr context_bias;    // (1 x d)
  TensorPtr gate_weight;     // (2d x d)
  TensorPtr gate_bias;       // (1 x d)
};

struct EncoderParams {
  int dim = 0;
  int gcn_layers = 0;
  TensorPtr token_embedding;     // (|vocab| x d)
  TensorPtr relation_embedding;  // (16 x d)
  std::vector<GcnLayerParams> gcn;
  AttentionParams attention;  // one parameter set, applied under both masks
  FusionParams fusion;
};

struct EncodeOptions {
  bool disable_explicit_graph = false;
  bool disable_implicit_graph = false;
  bool disable_rule_marker = false;
};

struct EncoderOutput {
  TensorPtr explicit_edu;  // (n x d) gated R-GCN states of the EDU vertices
  TensorPtr fused;         // (s x d) over the rule region
  TensorPtr combined;      // (n x d) per-EDU inputs to the decoder
  MaskMatrix local_mask;
  MaskMatrix context_mask;
};

// Initial vertex states: EDU vertices from the given per-EDU vectors, the
// global vertex from the scenario vector, relation vertices from the
// relation-type embedding table.
TensorPtr init_vertex_states(ComputeGraph& g, const LeviGraph& graph, const TensorPtr& rule_vectors,
                             const TensorPtr& scenario_vector, const EncoderParams& params);

// One gated relational message-passing step:
//   h_p' = ReLU( sum_r sum_{q in N_r(p)} sigmoid(h_q W_{r,g}) * (1/c_{p,r}) * W_r h_q )
// where N_r(p) are in-neighbors of p under edge type r and c_{p,r} = |N_r(p)|.
TensorPtr gcn_layer(ComputeGraph& g, const LeviGraph& graph, const TensorPtr& states,
                    const GcnLayerParams& params);

// Complementary token masks over the rule region: the local mask keeps
// intra-EDU pairs visible, the contextual mask keeps exactly the others.
struct RuleMasks {
  MaskMatrix local;
  MaskMatrix context;
};
RuleMasks build_masks(const std::vector<int>& edu_index_of_rule_token);

TensorPtr multi_head_attention(ComputeGraph& g, const TensorPtr& x, const MaskMatrix& mask,
                               const AttentionParams& params);

inline TensorPtr implicit_encode(ComputeGraph& g, const TensorPtr& embeddings, const MaskMatrix& mask,
                                 const AttentionParams& params) {
  return multi_head_attention(g, embeddings, mask, params);
}

// Gated fusion of the two masked-attention views with the raw embeddings:
//   E1 = ReLU(FC([E, Gl, E-Gl, E*Gl]))   E2 = ReLU(FC([E, Gc, E-Gc, E*Gc]))
//   gate = sigmoid(FC([E1, E2]))         C = gate*Gl + (1-gate)*Gc
TensorPtr gated_fuse(ComputeGraph& g, const TensorPtr& embeddings, const TensorPtr& local_view,
                     const TensorPtr& context_view, const FusionParams& params);

// Full encoder: explicit path over the Levi graph plus implicit path over the
// rule region, combined at the per-EDU readout positions.
EncoderOutput encode(ComputeGraph& g, const TokenizedInput& layout, const TensorPtr& full_embeddings,
                     const TensorPtr& scenario_vector, const LeviGraph& graph,
                     const EncoderParams& params, const EncodeOptions& options);

}  // namespace cmr
