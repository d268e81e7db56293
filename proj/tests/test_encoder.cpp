#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "cmr/encoder.hpp"
#include "cmr/model.hpp"
#include "cmr/rng.hpp"
#include "cmr/synthetic.hpp"

using namespace cmr;

namespace {

TensorPtr random_tensor(Pcg32& rng, std::vector<int> shape, double scale = 1.0) {
  auto t = make_tensor(std::move(shape), 0.0, true);
  for (auto& v : t->data) v = scale * rng.next_normal();
  return t;
}

AttentionParams random_attention(Pcg32& rng, int dim, int heads) {
  AttentionParams a;
  a.dim = dim;
  a.heads = heads;
  for (int h = 0; h < heads; ++h) {
    a.query.push_back(random_tensor(rng, {dim, dim / heads}, 0.4));
    a.key.push_back(random_tensor(rng, {dim, dim / heads}, 0.4));
    a.value.push_back(random_tensor(rng, {dim, dim / heads}, 0.4));
  }
  a.output = random_tensor(rng, {dim, dim}, 0.4);
  return a;
}

}  // namespace

TEST_CASE("mask construction follows the complementary local/context rule") {
  const RuleMasks masks = build_masks({0, 0, 1});
  CHECK(masks.local.values == std::vector<double>{0, 0, kNegInf, 0, 0, kNegInf, kNegInf, kNegInf, 0});
  CHECK(masks.context.values == std::vector<double>{kNegInf, kNegInf, 0, kNegInf, kNegInf, 0, 0, 0, kNegInf});
}

TEST_CASE("single-EDU masks are fully local") {
  const RuleMasks masks = build_masks({0, 0, 0, 0});
  for (double v : masks.local.values) CHECK(v == 0.0);
  for (double v : masks.context.values) CHECK(v == kNegInf);
}

TEST_CASE("mask complementarity on random index vectors") {
  Pcg32 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int s = 1 + rng.next_below(64);
    std::vector<int> index(s);
    int edu = 0;
    for (int i = 0; i < s; ++i) {
      if (i > 0 && rng.next_double() < 0.3) ++edu;
      index[i] = edu;
    }
    const RuleMasks masks = build_masks(index);
    for (std::size_t c = 0; c < masks.local.values.size(); ++c) {
      const bool local_zero = masks.local.values[c] == 0.0;
      const bool context_zero = masks.context.values[c] == 0.0;
      CHECK(local_zero != context_zero);
    }
  }
}

TEST_CASE("gcn layer reproduces the isolated-vertex hand computation") {
  // One vertex with only a self loop, identity self weight, zero gate weight,
  // all-ones state: output = ReLU(sigmoid(0) * 1/1 * I * 1) = 0.5 * ones.
  const int d = 4;
  LeviGraph g;
  g.edu_count = 1;
  g.vertices = {LeviVertex{VertexKind::Edu, 0, RelationType::Comment}};
  g.edges = {LeviEdge{0, 0, EdgeType::SelfLoop}};

  GcnLayerParams layer;
  for (int t = 0; t < kEdgeTypeCount; ++t) {
    layer.weight[t] = make_tensor({d, d}, 0.0, true);
    layer.gate[t] = make_tensor({d, 1}, 0.0, true);
  }
  for (int i = 0; i < d; ++i) layer.weight[static_cast<int>(EdgeType::SelfLoop)]->at(i, i) = 1.0;

  ComputeGraph tape;
  auto h = make_tensor({1, d}, 1.0, true);
  auto out = gcn_layer(tape, g, h, layer);
  for (int j = 0; j < d; ++j) CHECK(out->at(0, j) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gcn layer with zero weights returns zeros and gates stay inside (0,1)") {
  Pcg32 rng(8);
  const int d = 6;
  const LeviGraph g = build_levi_graph(3, {DiscourseLink{0, 1, RelationType::Contrast},
                                           DiscourseLink{1, 2, RelationType::Alternation}});
  GcnLayerParams zeros;
  for (int t = 0; t < kEdgeTypeCount; ++t) {
    zeros.weight[t] = make_tensor({d, d}, 0.0, true);
    zeros.gate[t] = make_tensor({d, 1}, 0.0, true);
  }
  ComputeGraph tape;
  auto h = random_tensor(rng, {g.vertex_count(), d});
  auto out = gcn_layer(tape, g, h, zeros);
  for (double v : out->data) CHECK(v == 0.0);

  // Gate values are sigmoids of finite inputs.
  auto gate_w = random_tensor(rng, {d, 1});
  ComputeGraph tape2;
  auto gate = tape2.sigmoid(tape2.matmul(h, gate_w));
  for (double v : gate->data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("gcn output is nonnegative and matches a direct dense computation") {
  Pcg32 rng(21);
  const int d = 5;
  const LeviGraph g = build_levi_graph(3, {DiscourseLink{0, 2, RelationType::Explanation},
                                           DiscourseLink{2, 1, RelationType::Background}});
  GcnLayerParams layer;
  for (int t = 0; t < kEdgeTypeCount; ++t) {
    layer.weight[t] = random_tensor(rng, {d, d}, 0.5);
    layer.gate[t] = random_tensor(rng, {d, 1}, 0.5);
  }
  ComputeGraph tape;
  auto h = random_tensor(rng, {g.vertex_count(), d});
  auto out = gcn_layer(tape, g, h, layer);

  // Dense re-computation straight from the update rule.
  const int V = g.vertex_count();
  for (int p = 0; p < V; ++p) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int t = 0; t < kEdgeTypeCount; ++t) {
        std::vector<int> senders;
        for (const auto& e : g.edges) {
          if (static_cast<int>(e.type) == t && e.dst == p) senders.push_back(e.src);
        }
        if (senders.empty()) continue;
        for (int q : senders) {
          double gate_in = 0.0, msg = 0.0;
          for (int k = 0; k < d; ++k) {
            gate_in += h->at(q, k) * layer.gate[t]->at(k, 0);
            msg += h->at(q, k) * layer.weight[t]->at(k, j);
          }
          acc += (1.0 / (1.0 + std::exp(-gate_in))) * msg / static_cast<double>(senders.size());
        }
      }
      const double expected = acc > 0.0 ? acc : 0.0;
      CHECK(out->at(p, j) == doctest::Approx(expected).epsilon(1e-10));
      CHECK(out->at(p, j) >= 0.0);
    }
  }
}

TEST_CASE("init_vertex_states places rule, relation and scenario vectors") {
  Pcg32 rng(4);
  const int d = 4;
  const LeviGraph g = build_levi_graph(2, {DiscourseLink{0, 1, RelationType::Contrast},
                                           DiscourseLink{1, 0, RelationType::Contrast}});
  EncoderParams params;
  params.dim = d;
  params.relation_embedding = random_tensor(rng, {kRelationTypeCount, d});

  ComputeGraph tape;
  auto rule = random_tensor(rng, {2, d});
  auto scenario = random_tensor(rng, {1, d});
  auto states = init_vertex_states(tape, g, rule, scenario, params);
  REQUIRE(states->rows() == g.vertex_count());
  // Two links of the same relation type share their initial state.
  for (int j = 0; j < d; ++j) {
    CHECK(states->at(2, j) == states->at(3, j));
    CHECK(states->at(2, j) ==
          params.relation_embedding->at(static_cast<int>(RelationType::Contrast), j));
    CHECK(states->at(4, j) == scenario->at(0, j));
    CHECK(states->at(0, j) == rule->at(0, j));
  }

  // Zero embedding table: relation vertices start at the zero vector.
  EncoderParams zero_params;
  zero_params.dim = d;
  zero_params.relation_embedding = make_tensor({kRelationTypeCount, d}, 0.0, true);
  auto zstates = init_vertex_states(tape, g, rule, scenario, zero_params);
  for (int j = 0; j < d; ++j) CHECK(zstates->at(2, j) == 0.0);

  auto bad = random_tensor(rng, {3, d});
  CHECK_THROWS_AS(init_vertex_states(tape, g, bad, scenario, params), std::invalid_argument);
}

TEST_CASE("vertex-state matrix shape on random graphs") {
  Pcg32 rng(14);
  const int d = 6;
  for (int trial = 0; trial < 30; ++trial) {
    const int edus = 1 + rng.next_below(5);
    std::vector<DiscourseLink> links;
    if (edus >= 2) {
      const int n_links = rng.next_below(5);
      for (int i = 0; i < n_links; ++i) {
        const int head = rng.next_below(edus);
        int dep = rng.next_below(edus);
        if (dep == head) dep = (dep + 1) % edus;
        links.push_back(DiscourseLink{head, dep, static_cast<RelationType>(rng.next_below(16))});
      }
    }
    const LeviGraph g = build_levi_graph(edus, links);
    EncoderParams params;
    params.dim = d;
    params.relation_embedding = random_tensor(rng, {kRelationTypeCount, d});
    ComputeGraph tape;
    auto states = init_vertex_states(tape, g, random_tensor(rng, {edus, d}),
                                     random_tensor(rng, {1, d}), params);
    CHECK(states->rows() == g.vertex_count());
    CHECK(states->cols() == d);
  }
}

TEST_CASE("attention output keeps shape and rejects bad head counts") {
  Pcg32 rng(33);
  const int d = 8, s = 5;
  auto x = random_tensor(rng, {s, d});
  AttentionParams attn = random_attention(rng, d, 2);
  ComputeGraph tape;
  auto out = multi_head_attention(tape, x, MaskMatrix::all_visible(s, s), attn);
  CHECK(out->rows() == s);
  CHECK(out->cols() == d);

  AttentionParams bad = attn;
  bad.heads = 3;  // 8 % 3 != 0
  CHECK_THROWS_AS(multi_head_attention(tape, x, MaskMatrix::all_visible(s, s), bad),
                  std::invalid_argument);
}

TEST_CASE("contextual attention on a single-EDU document is all zeros") {
  Pcg32 rng(9);
  const int d = 8, s = 4;
  auto x = random_tensor(rng, {s, d});
  AttentionParams attn = random_attention(rng, d, 2);
  const RuleMasks masks = build_masks({0, 0, 0, 0});
  ComputeGraph tape;
  auto out = implicit_encode(tape, x, masks.context, attn);
  for (double v : out->data) CHECK(v == 0.0);
}

TEST_CASE("within-EDU permutation equivariance of masked attention") {
  Pcg32 rng(41);
  const int d = 8;
  const std::vector<int> index = {0, 0, 0, 1, 1, 2};
  const int s = static_cast<int>(index.size());
  auto x = random_tensor(rng, {s, d});

  // Swap two tokens inside EDU 0 (positions 0 and 2): the EDU index vector is
  // unchanged, so both masks are literally identical and outputs must permute.
  std::vector<int> perm = {2, 1, 0, 3, 4, 5};
  auto xp = make_tensor({s, d}, 0.0, true);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < d; ++j) xp->at(i, j) = x->at(perm[i], j);

  AttentionParams attn = random_attention(rng, d, 2);
  const RuleMasks masks = build_masks(index);
  for (const MaskMatrix* mask : {&masks.local, &masks.context}) {
    ComputeGraph tape;
    auto out = implicit_encode(tape, x, *mask, attn);
    auto outp = implicit_encode(tape, xp, *mask, attn);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < d; ++j) {
        CHECK(outp->at(i, j) == doctest::Approx(out->at(perm[i], j)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("gated fusion properties") {
  Pcg32 rng(55);
  const int d = 6, s = 4;
  auto E = random_tensor(rng, {s, d});
  auto Gl = random_tensor(rng, {s, d});
  auto Gc = random_tensor(rng, {s, d});

  FusionParams params;
  params.local_weight = random_tensor(rng, {4 * d, d}, 0.3);
  params.local_bias = random_tensor(rng, {1, d}, 0.3);
  params.context_weight = random_tensor(rng, {4 * d, d}, 0.3);
  params.context_bias = random_tensor(rng, {1, d}, 0.3);
  params.gate_weight = random_tensor(rng, {2 * d, d}, 0.3);
  params.gate_bias = make_tensor({1, d}, 0.0, true);

  SUBCASE("large positive gate bias forces C = local view") {
    for (auto& v : params.gate_bias->data) v = 50.0;
    ComputeGraph tape;
    auto C = gated_fuse(tape, E, Gl, Gc, params);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < d; ++j) CHECK(C->at(i, j) == doctest::Approx(Gl->at(i, j)).epsilon(1e-12));
  }
  SUBCASE("equal views are returned unchanged regardless of the gate") {
    ComputeGraph tape;
    auto C = gated_fuse(tape, E, Gl, Gl, params);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < d; ++j) CHECK(C->at(i, j) == doctest::Approx(Gl->at(i, j)).epsilon(1e-12));
  }
  SUBCASE("output lies elementwise between the two views") {
    for (int trial = 0; trial < 20; ++trial) {
      auto a = random_tensor(rng, {s, d});
      auto b = random_tensor(rng, {s, d});
      ComputeGraph tape;
      auto C = gated_fuse(tape, E, a, b, params);
      for (std::size_t i = 0; i < C->size(); ++i) {
        CHECK(C->data[i] >= std::min(a->data[i], b->data[i]) - 1e-12);
        CHECK(C->data[i] <= std::max(a->data[i], b->data[i]) + 1e-12);
      }
    }
  }
  SUBCASE("shape mismatch rejected") {
    ComputeGraph tape;
    auto short_view = random_tensor(rng, {s - 1, d});
    CHECK_THROWS_AS(gated_fuse(tape, E, short_view, Gc, params), std::invalid_argument);
  }
}

TEST_CASE("encode produces one combined vector per EDU and is deterministic") {
  GeneratorConfig config;
  config.n_examples = 100;
  const auto dataset = generate_synthetic(config, 17);
  const Vocabulary vocab = build_vocabulary(dataset);
  ModelConfig mc;
  mc.dim = 16;
  mc.heads = 2;
  const ModelParams params = ModelParams::init(mc, vocab, 3);

  for (const auto& ex : dataset) {
    ForwardResult res = forward(params, ex, mc, false);
    CHECK(res.encoder_out.combined->rows() == static_cast<int>(ex.rule_edus.size()));
    CHECK(res.encoder_out.combined->cols() == mc.dim);
  }

  // Determinism of the full forward pass.
  ForwardResult a = forward(params, dataset[0], mc, true);
  ForwardResult b = forward(params, dataset[0], mc, true);
  CHECK(a.objective->data[0] == b.objective->data[0]);
  CHECK(a.encoder_out.combined->data == b.encoder_out.combined->data);
}

TEST_CASE("zeroing gcn weights leaves the implicit path in charge") {
  GeneratorConfig config;
  config.n_examples = 5;
  const auto dataset = generate_synthetic(config, 23);
  const Vocabulary vocab = build_vocabulary(dataset);
  ModelConfig mc;
  mc.dim = 16;
  mc.heads = 2;
  ModelParams params = ModelParams::init(mc, vocab, 3);
  for (auto& layer : params.encoder.gcn) {
    for (auto& w : layer.weight) std::fill(w->data.begin(), w->data.end(), 0.0);
  }
  ModelConfig no_explicit = mc;
  no_explicit.disable_explicit_graph = true;

  const Example& ex = dataset[0];
  ForwardResult with_zeroed = forward(params, ex, mc, false);
  ForwardResult without = forward(params, ex, no_explicit, false);
  for (std::size_t i = 0; i < with_zeroed.encoder_out.combined->size(); ++i) {
    CHECK(with_zeroed.encoder_out.combined->data[i] ==
          doctest::Approx(without.encoder_out.combined->data[i]).epsilon(1e-12));
  }
}

TEST_CASE("relabeling EDUs by a permutation permutes the combined vectors") {
  // Swap the two EDUs of a linked example, relabeling the link endpoints and
  // the entailment states consistently: r_i must follow the permutation.
  Example ex;
  ex.example_id = "perm";
  ex.tree_id = "perm";
  ex.rule_edus = {split_tokens("alpha beta gamma"), split_tokens("delta epsilon")};
  ex.relation_links = {DiscourseLink{0, 1, RelationType::Conditional}};
  ex.question = split_tokens("q w");
  ex.scenario = split_tokens("s");
  ex.gold_entailment = {EntailmentState::Entailment, EntailmentState::Contradiction};
  ex.gold_decision = Decision::No;

  Example swapped = ex;
  std::swap(swapped.rule_edus[0], swapped.rule_edus[1]);
  std::swap(swapped.gold_entailment[0], swapped.gold_entailment[1]);
  swapped.relation_links = {DiscourseLink{1, 0, RelationType::Conditional}};

  const Vocabulary vocab = build_vocabulary({ex});
  ModelConfig mc;
  mc.dim = 8;
  mc.heads = 2;
  const ModelParams params = ModelParams::init(mc, vocab, 5);

  ForwardResult a = forward(params, ex, mc, false);
  ForwardResult b = forward(params, swapped, mc, false);
  for (int j = 0; j < mc.dim; ++j) {
    CHECK(a.encoder_out.combined->at(0, j) ==
          doctest::Approx(b.encoder_out.combined->at(1, j)).epsilon(1e-9));
    CHECK(a.encoder_out.combined->at(1, j) ==
          doctest::Approx(b.encoder_out.combined->at(0, j)).epsilon(1e-9));
  }
}
