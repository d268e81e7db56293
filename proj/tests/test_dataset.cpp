#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "cmr/dataset.hpp"
#include "cmr/rng.hpp"
#include "cmr/synthetic.hpp"

using namespace cmr;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/cmr_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

Example tiny_example() {
  Example ex;
  ex.example_id = "ex-0";
  ex.tree_id = "tree-0";
  ex.rule_edus = {split_tokens("a b"), split_tokens("c")};
  ex.relation_links = {DiscourseLink{0, 1, RelationType::Continuation}};
  ex.question = split_tokens("q");
  ex.scenario = split_tokens("s");
  ex.gold_entailment = {EntailmentState::Entailment, EntailmentState::Entailment};
  ex.gold_decision = Decision::Yes;
  return ex;
}

}  // namespace

TEST_CASE("layout follows the marker convention") {
  const Example ex = tiny_example();
  Vocabulary vocab = build_vocabulary({ex});
  const TokenizedInput t = layout_sequence(ex, vocab);

  // [CLS] q [SEP] s [SEP] [RULE] a b [RULE] c
  REQUIRE(t.length() == 10);
  CHECK(t.token_ids[0] == Vocabulary::kClsId);
  CHECK(t.token_ids[2] == Vocabulary::kSepId);
  CHECK(t.token_ids[4] == Vocabulary::kSepId);
  CHECK(t.token_ids[5] == Vocabulary::kRuleId);
  CHECK(t.token_ids[8] == Vocabulary::kRuleId);
  CHECK(t.edu_index_of_token == std::vector<int>{-1, -1, -1, -1, -1, 0, 0, 0, 1, 1});
  CHECK(t.rule_marker_positions == std::vector<int>{5, 8});
  CHECK(t.rule_region_start == 5);
  CHECK(t.question.start == 1);
  CHECK(t.question.length == 1);
  CHECK(t.scenario.length == 1);
  REQUIRE(t.edu_word_spans.size() == 2);
  CHECK(t.edu_word_spans[0].start == 6);
  CHECK(t.edu_word_spans[0].length == 2);
  CHECK(t.edu_word_spans[1].length == 1);
}

TEST_CASE("empty scenario keeps its separator") {
  Example ex = tiny_example();
  ex.scenario.clear();
  Vocabulary vocab = build_vocabulary({ex});
  const TokenizedInput t = layout_sequence(ex, vocab);
  // [CLS] q [SEP] [SEP] [RULE] a b [RULE] c
  REQUIRE(t.length() == 9);
  CHECK(t.token_ids[2] == Vocabulary::kSepId);
  CHECK(t.token_ids[3] == Vocabulary::kSepId);
  CHECK(t.scenario.length == 0);
}

TEST_CASE("history turns end with the answer token and a separator") {
  Example ex = tiny_example();
  ex.history = {HistoryTurn{split_tokens("h1 h2"), true}, HistoryTurn{split_tokens("h3"), false}};
  Vocabulary vocab = build_vocabulary({ex});
  const TokenizedInput t = layout_sequence(ex, vocab);
  REQUIRE(t.history.size() == 2);
  CHECK(vocab.token_of(t.token_ids[t.history[0].start + 2]) == "yes");
  CHECK(vocab.token_of(t.token_ids[t.history[1].start + 1]) == "no");
  CHECK(t.token_ids[t.history[0].start + 3] == Vocabulary::kSepId);
  // Non-rule tokens carry the -1 sentinel.
  for (int i = 0; i < t.rule_region_start; ++i) CHECK(t.edu_index_of_token[i] == -1);
}

TEST_CASE("truncation drops history first and never drops rule markers") {
  Example ex = tiny_example();
  for (int i = 0; i < 10; ++i) {
    ex.history.push_back(HistoryTurn{split_tokens("are you x" + std::to_string(i)), true});
  }
  Vocabulary vocab = build_vocabulary({ex});

  const TokenizedInput full = layout_sequence(ex, vocab, 256);
  CHECK(full.history.size() == 10);

  const TokenizedInput tight = layout_sequence(ex, vocab, 20);
  CHECK(tight.length() <= 20);
  CHECK(tight.history.size() < 10);
  CHECK(tight.rule_marker_positions.size() == 2);
  // Most recent turns survive.
  if (!tight.history.empty()) {
    const Segment last = tight.history.back();
    CHECK(vocab.token_of(tight.token_ids[last.start + 2]) ==
          vocab.token_of(full.token_ids[full.history.back().start + 2]));
  }

  // Harsh budget: markers survive even when words are trimmed.
  const TokenizedInput minimal = layout_sequence(ex, vocab, 5);
  CHECK(minimal.rule_marker_positions.size() == 2);
  CHECK(minimal.length() <= 5);
  CHECK_THROWS_AS(layout_sequence(ex, vocab, 4), std::invalid_argument);
}

TEST_CASE("marker count equals EDU count on random examples") {
  GeneratorConfig config;
  config.n_examples = 100;
  const auto dataset = generate_synthetic(config, 31);
  Vocabulary vocab = build_vocabulary(dataset);
  for (const auto& ex : dataset) {
    const TokenizedInput t = layout_sequence(ex, vocab);
    CHECK(t.rule_marker_positions.size() == ex.rule_edus.size());
    // I is non-decreasing over the rule region.
    for (int i = t.rule_region_start + 1; i < t.length(); ++i) {
      CHECK(t.edu_index_of_token[i] >= t.edu_index_of_token[i - 1]);
    }
  }
}

TEST_CASE("layout is injective on distinct inputs") {
  GeneratorConfig config;
  config.n_examples = 60;
  const auto dataset = generate_synthetic(config, 8);
  Vocabulary vocab = build_vocabulary(dataset);
  std::vector<std::vector<int>> layouts;
  std::vector<std::size_t> owners;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    layouts.push_back(layout_sequence(dataset[i], vocab).token_ids);
    owners.push_back(i);
  }
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    for (std::size_t j = i + 1; j < layouts.size(); ++j) {
      if (layouts[i] != layouts[j]) continue;
      const Example& a = dataset[owners[i]];
      const Example& b = dataset[owners[j]];
      const bool same_surface = a.question == b.question && a.scenario == b.scenario &&
                                a.history == b.history && a.rule_edus == b.rule_edus;
      CHECK(same_surface);
    }
  }
}

TEST_CASE("unknown tokens map to the UNK id") {
  const Example ex = tiny_example();
  Vocabulary vocab;  // empty vocabulary: everything is unknown
  const TokenizedInput t = layout_sequence(ex, vocab);
  CHECK(t.token_ids[1] == Vocabulary::kUnkId);
  CHECK(t.token_ids[6] == Vocabulary::kUnkId);
}

TEST_CASE("vocabulary bijection over non-reserved entries") {
  Vocabulary v;
  const int a = v.add("alpha");
  const int b = v.add("beta");
  CHECK(a != b);
  CHECK(v.add("alpha") == a);
  CHECK(v.id_of("alpha") == a);
  CHECK(v.token_of(b) == "beta");
  CHECK(v.id_of("missing") == Vocabulary::kUnkId);
  CHECK_THROWS_AS(v.token_of(99), std::out_of_range);
  const Vocabulary rebuilt = Vocabulary::from_tokens(v.tokens());
  CHECK(rebuilt.tokens() == v.tokens());
}

TEST_CASE("dataset save and load round trip") {
  GeneratorConfig config;
  config.n_examples = 40;
  const auto dataset = generate_synthetic(config, 12);
  TempFile file("roundtrip.jsonl");
  save_dataset(file.path, dataset);
  const auto loaded = load_dataset(file.path);
  REQUIRE(loaded.size() == dataset.size());
  CHECK(loaded == dataset);
}

TEST_CASE("load rejects malformed and invalid records with line numbers") {
  TempFile file("bad.jsonl");
  SUBCASE("malformed json") {
    std::ofstream(file.path) << "{not json}\n";
    CHECK_THROWS_WITH_AS(load_dataset(file.path), doctest::Contains("line 1"), std::runtime_error);
  }
  SUBCASE("inquire without a span") {
    std::ofstream(file.path)
        << R"({"example_id":"x","tree_id":"t","rule_edus":["a b"],"relation_links":[],)"
        << R"("question":"q","scenario":"","history":[],"gold_decision":"inquire"})" << "\n";
    CHECK_THROWS_WITH_AS(load_dataset(file.path), doctest::Contains("validation"), std::runtime_error);
  }
  SUBCASE("missing field names the line") {
    std::ofstream out(file.path);
    out << R"({"example_id":"a","tree_id":"t","rule_edus":["a"],"relation_links":[],"question":"q",)"
        << R"("scenario":"","history":[],"gold_decision":"yes"})" << "\n";
    out << R"({"example_id":"b"})" << "\n";
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset(file.path), doctest::Contains("line 2"), std::runtime_error);
  }
}

TEST_CASE("records without gold entailment are accepted for inference") {
  TempFile file("nogold.jsonl");
  std::ofstream(file.path)
      << R"({"example_id":"x","tree_id":"t","rule_edus":["a b","c"],)"
      << R"("relation_links":[{"head":0,"dep":1,"relation":"continuation"}],)"
      << R"("question":"q","scenario":"s","history":[{"q":"h","a":"yes"}],"gold_decision":"no"})"
      << "\n";
  const auto loaded = load_dataset(file.path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].gold_entailment.empty());
  CHECK(loaded[0].gold_decision == Decision::No);
}

TEST_CASE("a hand-written loan dialog record parses into one example") {
  TempFile file("loan.jsonl");
  std::ofstream(file.path)
      << R"({"example_id":"loan-1","tree_id":"loan-tree",)"
      << R"("rule_edus":["you must be enrolled at least half time",)"
      << R"("you must show financial need"],)"
      << R"("relation_links":[{"head":0,"dep":1,"relation":"continuation"}],)"
      << R"("question":"can i get this loan",)"
      << R"("scenario":"i am a full time student",)"
      << R"("history":[{"q":"are you enrolled","a":"yes"}],)"
      << R"("gold_entailment":["entailment","unmentioned"],)"
      << R"("gold_decision":"inquire","gold_span":{"edu":1,"start":0,"end":4}})" << "\n";
  const auto loaded = load_dataset(file.path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].gold_decision == Decision::Inquire);
  CHECK(loaded[0].gold_span->edu == 1);
  CHECK(loaded[0].history.size() == 1);
}

TEST_CASE("validate_example enforces the span and entailment invariants") {
  Example ex = tiny_example();
  SUBCASE("span without inquire") {
    ex.gold_span = GoldSpan{0, 0, 1};
    CHECK_THROWS_AS(validate_example(ex), std::invalid_argument);
  }
  SUBCASE("entailment count mismatch") {
    ex.gold_entailment.pop_back();
    CHECK_THROWS_AS(validate_example(ex), std::invalid_argument);
  }
  SUBCASE("span bounds checked") {
    ex.gold_decision = Decision::Inquire;
    ex.gold_span = GoldSpan{1, 0, 5};
    CHECK_THROWS_AS(validate_example(ex), std::invalid_argument);
  }
}
