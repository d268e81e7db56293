#include "cmr/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cmr {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Decision d) {
  switch (d) {
    case Decision::Yes: return "yes";
    case Decision::No: return "no";
    case Decision::Inquire: return "inquire";
    case Decision::Irrelevant: return "irrelevant";
  }
  throw std::invalid_argument("bad decision value");
}

Decision decision_from_string(const std::string& s) {
  if (s == "yes") return Decision::Yes;
  if (s == "no") return Decision::No;
  if (s == "inquire") return Decision::Inquire;
  if (s == "irrelevant") return Decision::Irrelevant;
  throw std::invalid_argument("unknown decision: " + s);
}

std::string to_string(EntailmentState s) {
  switch (s) {
    case EntailmentState::Entailment: return "entailment";
    case EntailmentState::Contradiction: return "contradiction";
    case EntailmentState::Unmentioned: return "unmentioned";
  }
  throw std::invalid_argument("bad entailment state value");
}

EntailmentState entailment_state_from_string(const std::string& s) {
  if (s == "entailment") return EntailmentState::Entailment;
  if (s == "contradiction") return EntailmentState::Contradiction;
  if (s == "unmentioned") return EntailmentState::Unmentioned;
  throw std::invalid_argument("unknown entailment state: " + s);
}

void validate_example(const Example& ex) {
  if (ex.rule_edus.empty()) throw std::invalid_argument("example has no rule EDUs");
  const int n = static_cast<int>(ex.rule_edus.size());
  if (!ex.gold_entailment.empty() && static_cast<int>(ex.gold_entailment.size()) != n) {
    throw std::invalid_argument("gold_entailment length does not equal EDU count");
  }
  if ((ex.gold_decision == Decision::Inquire) != ex.gold_span.has_value()) {
    throw std::invalid_argument("gold_span must be present exactly when the decision is inquire");
  }
  if (ex.gold_span) {
    const auto& sp = *ex.gold_span;
    if (sp.edu < 0 || sp.edu >= n) throw std::invalid_argument("gold_span EDU index out of range");
    const int len = static_cast<int>(ex.rule_edus[sp.edu].size());
    if (sp.start < 0 || sp.start > sp.end || sp.end >= len) {
      throw std::invalid_argument("gold_span token offsets out of range");
    }
  }
  for (const auto& link : ex.relation_links) {
    if (link.head == link.dep || link.head < 0 || link.head >= n || link.dep < 0 || link.dep >= n) {
      throw std::invalid_argument("relation link endpoints invalid");
    }
  }
}

Vocabulary::Vocabulary() {
  tokens_ = {"[CLS]", "[SEP]", "[RULE]", "[UNK]"};
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) ids_[tokens_[i]] = i;
}

int Vocabulary::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const int id = size();
  tokens_.push_back(token);
  ids_[token] = id;
  return id;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  return tokens_[id];
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  if (tokens.size() < 4 || tokens[0] != "[CLS]" || tokens[1] != "[SEP]" || tokens[2] != "[RULE]" ||
      tokens[3] != "[UNK]") {
    throw std::invalid_argument("vocabulary token list must start with the four reserved markers");
  }
  for (std::size_t i = 4; i < tokens.size(); ++i) v.add(tokens[i]);
  return v;
}

Vocabulary build_vocabulary(const std::vector<Example>& dataset) {
  Vocabulary v;
  for (const auto& ex : dataset) {
    for (const auto& t : ex.question) v.add(t);
    for (const auto& t : ex.scenario) v.add(t);
    for (const auto& turn : ex.history) {
      for (const auto& t : turn.question) v.add(t);
      v.add(turn.answer_yes ? "yes" : "no");
    }
    for (const auto& edu : ex.rule_edus) {
      for (const auto& t : edu) v.add(t);
    }
  }
  return v;
}

namespace {

// The prefix (everything before the rule region) is assembled after
// truncation decisions so marker bookkeeping stays simple.
struct Prefix {
  TokenList question;
  TokenList scenario;
  std::vector<HistoryTurn> history;

  int length() const {
    int len = 1 + static_cast<int>(question.size()) + 1 + static_cast<int>(scenario.size()) + 1;
    for (const auto& turn : history) len += static_cast<int>(turn.question.size()) + 2;
    return len;
  }
};

}  // namespace

TokenizedInput layout_sequence(const Example& ex, const Vocabulary& vocab, int max_len) {
  if (max_len < 4) throw std::invalid_argument("layout_sequence: max_len too small");
  validate_example(ex);

  std::vector<TokenList> edus = ex.rule_edus;
  int rule_len = 0;
  for (const auto& edu : edus) rule_len += 1 + static_cast<int>(edu.size());

  Prefix prefix{ex.question, ex.scenario, ex.history};
  // Truncation order: whole history turns (oldest first), scenario tail,
  // question tail, and as a last resort EDU word tokens from the document end.
  while (prefix.length() + rule_len > max_len && !prefix.history.empty()) {
    prefix.history.erase(prefix.history.begin());
  }
  while (prefix.length() + rule_len > max_len && !prefix.scenario.empty()) {
    prefix.scenario.pop_back();
  }
  while (prefix.length() + rule_len > max_len && !prefix.question.empty()) {
    prefix.question.pop_back();
  }
  for (auto it = edus.rbegin(); it != edus.rend() && prefix.length() + rule_len > max_len; ++it) {
    while (!it->empty() && prefix.length() + rule_len > max_len) {
      it->pop_back();
      --rule_len;
    }
  }
  if (prefix.length() + rule_len > max_len) {
    throw std::invalid_argument("layout_sequence: rule markers alone exceed max_len");
  }

  TokenizedInput out;
  auto push = [&](int id, int edu_index) {
    out.token_ids.push_back(id);
    out.edu_index_of_token.push_back(edu_index);
  };

  push(Vocabulary::kClsId, -1);
  out.question.start = out.length();
  for (const auto& t : prefix.question) push(vocab.id_of(t), -1);
  out.question.length = out.length() - out.question.start;
  push(Vocabulary::kSepId, -1);

  out.scenario.start = out.length();
  for (const auto& t : prefix.scenario) push(vocab.id_of(t), -1);
  out.scenario.length = out.length() - out.scenario.start;
  push(Vocabulary::kSepId, -1);

  for (const auto& turn : prefix.history) {
    Segment seg;
    seg.start = out.length();
    for (const auto& t : turn.question) push(vocab.id_of(t), -1);
    push(vocab.id_of(turn.answer_yes ? "yes" : "no"), -1);
    seg.length = out.length() - seg.start;
    out.history.push_back(seg);
    push(Vocabulary::kSepId, -1);
  }

  out.rule_region_start = out.length();
  for (std::size_t k = 0; k < edus.size(); ++k) {
    out.rule_marker_positions.push_back(out.length());
    push(Vocabulary::kRuleId, static_cast<int>(k));
    Segment words;
    words.start = out.length();
    for (const auto& t : edus[k]) push(vocab.id_of(t), static_cast<int>(k));
    words.length = out.length() - words.start;
    out.edu_word_spans.push_back(words);
  }
  return out;
}

namespace {

TokenList tokens_from_json(const ordered_json& j, const char* field) {
  if (!j.is_string()) throw std::runtime_error(std::string(field) + " must be a string");
  return split_tokens(j.get<std::string>());
}

Example example_from_json(const ordered_json& j) {
  Example ex;
  ex.example_id = j.at("example_id").get<std::string>();
  ex.tree_id = j.at("tree_id").get<std::string>();
  for (const auto& edu : j.at("rule_edus")) {
    ex.rule_edus.push_back(tokens_from_json(edu, "rule_edus entry"));
  }
  for (const auto& link : j.at("relation_links")) {
    ex.relation_links.push_back(DiscourseLink{
        link.at("head").get<int>(), link.at("dep").get<int>(),
        relation_type_from_string(link.at("relation").get<std::string>())});
  }
  ex.question = tokens_from_json(j.at("question"), "question");
  ex.scenario = tokens_from_json(j.at("scenario"), "scenario");
  for (const auto& turn : j.at("history")) {
    HistoryTurn h;
    h.question = tokens_from_json(turn.at("q"), "history q");
    const std::string a = turn.at("a").get<std::string>();
    if (a != "yes" && a != "no") throw std::runtime_error("history answer must be yes or no");
    h.answer_yes = (a == "yes");
    ex.history.push_back(h);
  }
  if (j.contains("gold_entailment") && !j.at("gold_entailment").is_null()) {
    for (const auto& s : j.at("gold_entailment")) {
      ex.gold_entailment.push_back(entailment_state_from_string(s.get<std::string>()));
    }
  }
  ex.gold_decision = decision_from_string(j.at("gold_decision").get<std::string>());
  if (j.contains("gold_span") && !j.at("gold_span").is_null()) {
    const auto& sp = j.at("gold_span");
    ex.gold_span = GoldSpan{sp.at("edu").get<int>(), sp.at("start").get<int>(), sp.at("end").get<int>()};
  }
  return ex;
}

ordered_json example_to_json(const Example& ex) {
  ordered_json j;
  j["example_id"] = ex.example_id;
  j["tree_id"] = ex.tree_id;
  j["rule_edus"] = ordered_json::array();
  for (const auto& edu : ex.rule_edus) j["rule_edus"].push_back(join_tokens(edu));
  j["relation_links"] = ordered_json::array();
  for (const auto& link : ex.relation_links) {
    j["relation_links"].push_back(
        ordered_json{{"head", link.head}, {"dep", link.dep}, {"relation", to_string(link.relation)}});
  }
  j["question"] = join_tokens(ex.question);
  j["scenario"] = join_tokens(ex.scenario);
  j["history"] = ordered_json::array();
  for (const auto& turn : ex.history) {
    j["history"].push_back(
        ordered_json{{"q", join_tokens(turn.question)}, {"a", turn.answer_yes ? "yes" : "no"}});
  }
  if (!ex.gold_entailment.empty()) {
    j["gold_entailment"] = ordered_json::array();
    for (auto s : ex.gold_entailment) j["gold_entailment"].push_back(to_string(s));
  }
  j["gold_decision"] = to_string(ex.gold_decision);
  if (ex.gold_span) {
    j["gold_span"] =
        ordered_json{{"edu", ex.gold_span->edu}, {"start", ex.gold_span->start}, {"end", ex.gold_span->end}};
  }
  return j;
}

}  // namespace

std::vector<Example> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<Example> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": parse error: " + e.what());
    }
    Example ex;
    try {
      ex = example_from_json(j);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": bad record: " + e.what());
    }
    try {
      validate_example(ex);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": validation error: " + e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void save_dataset(const std::string& path, const std::vector<Example>& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open dataset file for writing: " + path);
  for (const auto& ex : dataset) {
    out << example_to_json(ex).dump() << "\n";
  }
}

TokenList split_tokens(const std::string& text) {
  TokenList out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string join_tokens(const TokenList& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace cmr
