#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cmr/levi_graph.hpp"

namespace cmr {

enum class Decision : std::uint8_t { Yes = 0, No = 1, Inquire = 2, Irrelevant = 3 };
inline constexpr int kDecisionCount = 4;

enum class EntailmentState : std::uint8_t { Entailment = 0, Contradiction = 1, Unmentioned = 2 };
inline constexpr int kEntailmentStateCount = 3;

std::string to_string(Decision d);
Decision decision_from_string(const std::string& s);
std::string to_string(EntailmentState s);
EntailmentState entailment_state_from_string(const std::string& s);

using TokenList = std::vector<std::string>;

struct HistoryTurn {
  TokenList question;
  bool answer_yes = false;

  bool operator==(const HistoryTurn&) const = default;
};

struct GoldSpan {
  int edu = 0;
  int start = 0;  // token offsets within the EDU, end inclusive
  int end = 0;

  bool operator==(const GoldSpan&) const = default;
};

// One flattened dialog turn. gold_entailment may be empty (inference-only
// records); when present it has one state per rule EDU. gold_span is present
// exactly when gold_decision is Inquire.
struct Example {
  std::string example_id;
  std::string tree_id;
  std::vector<TokenList> rule_edus;
  std::vector<DiscourseLink> relation_links;
  TokenList question;
  TokenList scenario;
  std::vector<HistoryTurn> history;
  std::vector<EntailmentState> gold_entailment;
  Decision gold_decision = Decision::Yes;
  std::optional<GoldSpan> gold_span;

  bool operator==(const Example&) const = default;
};

// Throws std::invalid_argument when an invariant is broken (entailment count,
// span presence, span bounds, link indices).
void validate_example(const Example& ex);

// Whitespace tokenizer over a closed vocabulary. Four marker ids are
// reserved; unknown tokens map to the UNK id.
class Vocabulary {
 public:
  static constexpr int kClsId = 0;
  static constexpr int kSepId = 1;
  static constexpr int kRuleId = 2;
  static constexpr int kUnkId = 3;

  Vocabulary();

  int add(const std::string& token);          // idempotent
  int id_of(const std::string& token) const;  // kUnkId when absent
  const std::string& token_of(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Rebuild from a serialized token list (checkpoint loading).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// First-seen scan over every token in the dataset, markers first.
Vocabulary build_vocabulary(const std::vector<Example>& dataset);

struct Segment {
  int start = 0;
  int length = 0;
};

// Token-id layout of one example:
//   [CLS] question [SEP] scenario [SEP] (history turn [SEP])* [RULE] edu_1 [RULE] edu_2 ...
// edu_index_of_token holds the EDU index for every rule-region token
// (markers included) and -1 elsewhere.
struct TokenizedInput {
  std::vector<int> token_ids;
  std::vector<int> edu_index_of_token;
  std::vector<int> rule_marker_positions;
  std::vector<Segment> edu_word_spans;  // per EDU, word tokens only (marker excluded)
  Segment question;
  Segment scenario;
  std::vector<Segment> history;  // per turn: follow-up tokens plus the answer token
  int rule_region_start = 0;

  int length() const { return static_cast<int>(token_ids.size()); }
  int rule_region_length() const { return length() - rule_region_start; }
};

// Longer sequences are truncated from the history side first (oldest turns
// dropped whole), then scenario, then question tails; rule markers are never
// dropped. EDU word tokens go last, trimmed from the end of the document.
TokenizedInput layout_sequence(const Example& ex, const Vocabulary& vocab, int max_len = 256);

// JSON Lines persistence, one example per line.
std::vector<Example> load_dataset(const std::string& path);
void save_dataset(const std::string& path, const std::vector<Example>& dataset);

TokenList split_tokens(const std::string& text);
std::string join_tokens(const TokenList& tokens);

}  // namespace cmr
