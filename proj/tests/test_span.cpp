#include <doctest.h>

#include <functional>
#include <map>
#include <stdexcept>

#include "cmr/rng.hpp"
#include "cmr/span.hpp"

using namespace cmr;

namespace {

// Independent edit-distance oracle: plain recursion with memoization, written
// against the definition rather than the iterative DP in production code.
int reference_edit_distance(const TokenList& a, const TokenList& b) {
  std::map<std::pair<int, int>, int> memo;
  std::function<int(int, int)> go = [&](int i, int j) -> int {
    if (i == static_cast<int>(a.size())) return static_cast<int>(b.size()) - j;
    if (j == static_cast<int>(b.size())) return static_cast<int>(a.size()) - i;
    const auto key = std::make_pair(i, j);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    int best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, go(i + 1, j) + 1);
    best = std::min(best, go(i, j + 1) + 1);
    memo[key] = best;
    return best;
  };
  return go(0, 0);
}

// Brute-force gold labeling straight from the definition.
SpanCandidate reference_gold_span(const std::vector<TokenList>& edus, const TokenList& question) {
  SpanCandidate best;
  int best_distance = -1, best_length = -1;
  for (int k = 0; k < static_cast<int>(edus.size()); ++k) {
    for (int i = 0; i < static_cast<int>(edus[k].size()); ++i) {
      for (int j = i; j < static_cast<int>(edus[k].size()); ++j) {
        TokenList span(edus[k].begin() + i, edus[k].begin() + j + 1);
        const int dist = reference_edit_distance(span, question);
        const int len = j - i + 1;
        if (best_distance < 0 || dist < best_distance ||
            (dist == best_distance && len < best_length)) {
          best_distance = dist;
          best_length = len;
          best = SpanCandidate{k, i, j, static_cast<double>(dist)};
        }
      }
    }
  }
  return best;
}

TokenList random_tokens(Pcg32& rng, int len, int alphabet) {
  TokenList out;
  for (int i = 0; i < len; ++i) out.push_back("w" + std::to_string(rng.next_below(alphabet)));
  return out;
}

}  // namespace

TEST_CASE("edit distance basics") {
  CHECK(token_edit_distance({}, {}) == 0);
  CHECK(token_edit_distance({"a"}, {}) == 1);
  CHECK(token_edit_distance({}, {"a", "b"}) == 2);
  CHECK(token_edit_distance({"a", "b", "c"}, {"a", "b", "c"}) == 0);
  CHECK(token_edit_distance({"a", "b"}, {"a", "x"}) == 1);
  CHECK(token_edit_distance({"a", "b"}, {"b", "a"}) == 2);
}

TEST_CASE("edit distance agrees with the recursive oracle") {
  Pcg32 rng(66);
  for (int trial = 0; trial < 200; ++trial) {
    const TokenList a = random_tokens(rng, rng.next_below(8), 4);
    const TokenList b = random_tokens(rng, rng.next_below(8), 4);
    CHECK(token_edit_distance(a, b) == reference_edit_distance(a, b));
  }
}

TEST_CASE("gold span for a question identical to one EDU") {
  const std::vector<TokenList> edus = {split_tokens("you must reside here"),
                                       split_tokens("you must work here")};
  const SpanCandidate got = gold_span_label(edus, split_tokens("you must work here"));
  CHECK(got.edu == 1);
  CHECK(got.start == 0);
  CHECK(got.end == 3);
  CHECK(got.score == 0.0);
}

TEST_CASE("gold span picks the overlapping suffix of the disaster-county rule") {
  const std::vector<TokenList> edus = {split_tokens("be located in a disaster declared county")};
  const TokenList question = split_tokens("are you located in a disaster declared county");
  const SpanCandidate got = gold_span_label(edus, question);
  const SpanCandidate want = reference_gold_span(edus, question);
  CHECK(got.edu == want.edu);
  CHECK(got.start == want.start);
  CHECK(got.end == want.end);
  // The best span is the suffix starting at "located".
  CHECK(got.start == 1);
  CHECK(got.end == 6);
}

TEST_CASE("single-token EDUs reduce to a nearest-token argmin") {
  const std::vector<TokenList> edus = {{"alpha"}, {"beta"}, {"gamma"}};
  const SpanCandidate got = gold_span_label(edus, {"beta"});
  const SpanCandidate want = reference_gold_span(edus, {"beta"});
  CHECK(got.edu == 1);
  CHECK(got.same_span(want));
}

TEST_CASE("gold span equals brute force on random inputs up to 30 tokens") {
  Pcg32 rng(31);
  for (int trial = 0; trial < 150; ++trial) {
    const int n_edus = 1 + rng.next_below(4);
    std::vector<TokenList> edus;
    int total = 0;
    for (int k = 0; k < n_edus; ++k) {
      const int len = 1 + rng.next_below(8);
      if (total + len > 30) break;
      total += len;
      edus.push_back(random_tokens(rng, len, 5));
    }
    if (edus.empty()) edus.push_back(random_tokens(rng, 3, 5));
    const TokenList question = random_tokens(rng, 1 + rng.next_below(8), 5);
    const SpanCandidate got = gold_span_label(edus, question);
    const SpanCandidate want = reference_gold_span(edus, question);
    CHECK(got.same_span(want));
    CHECK(got.score == want.score);
  }
}

TEST_CASE("gold span rejects empty inputs") {
  CHECK_THROWS_AS(gold_span_label({{"a"}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(gold_span_label({TokenList{}}, {"q"}), std::invalid_argument);
}

TEST_CASE("extract_span ties break lexicographically") {
  Pcg32 rng(3);
  SpanParams params;
  params.start_vector = make_tensor({4, 1}, 0.0, true);
  params.end_vector = make_tensor({4, 1}, 0.0, true);
  std::vector<TensorPtr> reps = {make_tensor({3, 4}, 1.0), make_tensor({2, 4}, 1.0)};
  const SpanCandidate got = extract_span(reps, params);
  CHECK(got.edu == 0);
  CHECK(got.start == 0);
  CHECK(got.end == 0);
}

TEST_CASE("a dominating token wins as a singleton span") {
  SpanParams params;
  params.start_vector = make_tensor({2, 1}, std::vector<double>{1.0, 0.0}, true);
  params.end_vector = make_tensor({2, 1}, std::vector<double>{1.0, 0.0}, true);
  auto reps = make_tensor({3, 2}, 0.0);
  reps->at(1, 0) = 10.0;  // token 1 dominates both scores
  const SpanCandidate got = extract_span({reps}, params);
  CHECK(got.edu == 0);
  CHECK(got.start == 1);
  CHECK(got.end == 1);
}

TEST_CASE("extract_span agrees with exhaustive enumeration in both modes") {
  Pcg32 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 3 + rng.next_below(3);
    SpanParams params;
    params.start_vector = make_tensor({d, 1}, 0.0, true);
    params.end_vector = make_tensor({d, 1}, 0.0, true);
    for (auto& v : params.start_vector->data) v = rng.next_normal();
    for (auto& v : params.end_vector->data) v = rng.next_normal();

    const int n_edus = 1 + rng.next_below(3);
    std::vector<TensorPtr> reps;
    int total = 0;
    for (int k = 0; k < n_edus; ++k) {
      const int len = 1 + rng.next_below(7);
      if (total + len > 20) break;
      total += len;
      auto t = make_tensor({len, d}, 0.0);
      for (auto& v : t->data) v = rng.next_normal();
      reps.push_back(t);
    }
    if (reps.empty()) continue;

    for (SpanScoreMode mode : {SpanScoreMode::Max, SpanScoreMode::Min}) {
      const SpanCandidate got = extract_span(reps, params, mode);
      CHECK(got.start <= got.end);

      // Exhaustive oracle over all (k, i <= j).
      SpanCandidate best;
      bool found = false;
      for (int k = 0; k < static_cast<int>(reps.size()); ++k) {
        for (int i = 0; i < reps[k]->rows(); ++i) {
          for (int j = i; j < reps[k]->rows(); ++j) {
            double s = 0.0, e = 0.0;
            for (int c = 0; c < d; ++c) {
              s += reps[k]->at(i, c) * params.start_vector->data[c];
              e += reps[k]->at(j, c) * params.end_vector->data[c];
            }
            const double score = s + e;
            const bool better = mode == SpanScoreMode::Max ? score > best.score : score < best.score;
            if (!found || better) {
              best = SpanCandidate{k, i, j, score};
              found = true;
            }
          }
        }
      }
      CHECK(got.same_span(best));
      CHECK(got.score == doctest::Approx(best.score).epsilon(1e-12));
    }
  }
}

TEST_CASE("span metrics") {
  const SpanCandidate a{0, 0, 3, 0.0};
  const SpanCandidate b{0, 2, 5, 0.0};
  const SpanCandidate c{1, 0, 3, 0.0};

  SUBCASE("identical lists") {
    const SpanMetrics m = span_metrics({a, c}, {a, c});
    CHECK(m.exact_match == 1.0);
    CHECK(m.token_f1 == 1.0);
  }
  SUBCASE("disjoint spans score zero") {
    const SpanMetrics m = span_metrics({a}, {c});
    CHECK(m.exact_match == 0.0);
    CHECK(m.token_f1 == 0.0);
  }
  SUBCASE("half-overlapping equal-length spans score one half") {
    const SpanMetrics m = span_metrics({a}, {b});
    CHECK(m.exact_match == 0.0);
    CHECK(m.token_f1 == doctest::Approx(0.5));
  }
  SUBCASE("length mismatch rejected") {
    CHECK_THROWS_AS(span_metrics({a}, {a, b}), std::invalid_argument);
  }
}
