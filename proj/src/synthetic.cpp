#include "cmr/synthetic.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "cmr/rng.hpp"

namespace cmr {

namespace {

const std::vector<std::string>& topic_words() {
  static const std::vector<std::string> v = {"loan",    "grant",   "visa",    "permit",  "refund",
                                             "rebate",  "pension", "license", "subsidy", "voucher"};
  return v;
}

const std::vector<std::string>& atom_words() {
  static const std::vector<std::string> v = {"resident", "employed",  "student", "married",
                                             "veteran",  "disabled",  "homeowner", "parent",
                                             "retired",  "insured"};
  return v;
}

TokenList make_question(Pcg32& rng, const std::string& topic) {
  switch (rng.next_below(3)) {
    case 0: return {"eligible", "for", "the", topic};
    case 1: return {"can", "i", "get", topic};
    default: return {"qualify", "for", topic};
  }
}

// Off-topic questions come from their own templates and name another topic.
TokenList make_unrelated_question(Pcg32& rng, const std::string& other_topic) {
  switch (rng.next_below(3)) {
    case 0: return {"when", "does", "the", "office", "process", other_topic};
    case 1: return {"where", "do", "i", "send", "forms", "about", other_topic};
    default: return {"how", "long", "until", "a", "reply", "about", other_topic};
  }
}

TokenList make_edu(int index, const std::string& topic, const std::string& atom) {
  if (index == 0) return {"applicants", "for", "the", topic, "must", "be", atom};
  return {"you", "must", "be", atom};
}

// Disjunctive groups are the connected components of the alternation links.
std::vector<std::vector<int>> alternation_groups(int n, const std::vector<DiscourseLink>& links) {
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& link : links) {
    if (link.relation != RelationType::Alternation) continue;
    parent[find(link.head)] = find(link.dep);
  }
  std::map<int, std::vector<int>> comps;
  for (int i = 0; i < n; ++i) comps[find(i)].push_back(i);
  std::vector<std::vector<int>> groups;
  for (auto& [root, members] : comps) {
    if (members.size() > 1) groups.push_back(std::move(members));
  }
  return groups;
}

enum class ElementStatus { Satisfied, Violated, Unresolved };

ElementStatus status_of_state(EntailmentState s) {
  switch (s) {
    case EntailmentState::Entailment: return ElementStatus::Satisfied;
    case EntailmentState::Contradiction: return ElementStatus::Violated;
    default: return ElementStatus::Unresolved;
  }
}

ElementStatus status_of_group(const std::vector<int>& members,
                              const std::vector<EntailmentState>& states) {
  bool any_entailed = false, all_contradicted = true;
  for (int m : members) {
    any_entailed |= states[m] == EntailmentState::Entailment;
    all_contradicted &= states[m] == EntailmentState::Contradiction;
  }
  if (any_entailed) return ElementStatus::Satisfied;
  if (all_contradicted) return ElementStatus::Violated;
  return ElementStatus::Unresolved;
}

}  // namespace

Decision decide(const std::vector<EntailmentState>& states, const std::vector<DiscourseLink>& links,
                bool question_relevant) {
  if (!question_relevant) return Decision::Irrelevant;
  const int n = static_cast<int>(states.size());
  const auto groups = alternation_groups(n, links);
  std::vector<bool> grouped(n, false);
  for (const auto& g : groups)
    for (int m : g) grouped[m] = true;

  bool any_violated = false, any_unresolved = false;
  auto fold = [&](ElementStatus st) {
    any_violated |= st == ElementStatus::Violated;
    any_unresolved |= st == ElementStatus::Unresolved;
  };
  for (int i = 0; i < n; ++i) {
    if (!grouped[i]) fold(status_of_state(states[i]));
  }
  for (const auto& g : groups) fold(status_of_group(g, states));

  if (any_violated) return Decision::No;
  if (any_unresolved) return Decision::Inquire;
  return Decision::Yes;
}

bool question_matches_rule(const Example& ex) {
  if (ex.question.empty()) return false;
  const std::string& topic = ex.question.back();
  for (const auto& edu : ex.rule_edus) {
    for (const auto& tok : edu) {
      if (tok == topic) return true;
    }
  }
  return false;
}

Decision decide_example(const Example& ex) {
  return decide(ex.gold_entailment, ex.relation_links, question_matches_rule(ex));
}

namespace {

struct Element {
  bool is_group = false;
  int single = -1;
  std::vector<int> members;
};

EntailmentState sample_state(Pcg32& rng, double p_entail, double p_contra) {
  const double u = rng.next_double();
  if (u < p_entail) return EntailmentState::Entailment;
  if (u < p_entail + p_contra) return EntailmentState::Contradiction;
  return EntailmentState::Unmentioned;
}

// Fill one element so that it reaches the requested status.
void fill_element(Pcg32& rng, const Element& el, ElementStatus target,
                  std::vector<EntailmentState>& states) {
  if (!el.is_group) {
    switch (target) {
      case ElementStatus::Satisfied: states[el.single] = EntailmentState::Entailment; break;
      case ElementStatus::Violated: states[el.single] = EntailmentState::Contradiction; break;
      case ElementStatus::Unresolved: states[el.single] = EntailmentState::Unmentioned; break;
    }
    return;
  }
  switch (target) {
    case ElementStatus::Satisfied: {
      const int winner = el.members[rng.next_below(static_cast<std::uint32_t>(el.members.size()))];
      for (int m : el.members) {
        states[m] = (m == winner) ? EntailmentState::Entailment : sample_state(rng, 0.25, 0.3);
      }
      return;
    }
    case ElementStatus::Violated:
      for (int m : el.members) states[m] = EntailmentState::Contradiction;
      return;
    case ElementStatus::Unresolved: {
      // No entailed member, at least one unmentioned.
      const int hole = el.members[rng.next_below(static_cast<std::uint32_t>(el.members.size()))];
      for (int m : el.members) {
        states[m] = (m == hole || rng.next_double() < 0.6) ? EntailmentState::Unmentioned
                                                           : EntailmentState::Contradiction;
      }
      return;
    }
  }
}

RelationType sample_relation(Pcg32& rng, const std::vector<std::pair<RelationType, double>>& weights,
                             double total) {
  double u = rng.next_double() * total;
  for (const auto& [rel, w] : weights) {
    u -= w;
    if (u < 0.0) return rel;
  }
  return weights.back().first;
}

}  // namespace

std::vector<Example> generate_synthetic(const GeneratorConfig& config, std::uint64_t seed) {
  if (config.n_examples <= 0) throw std::invalid_argument("generator: n_examples must be positive");
  if (config.edu_min < 1 || config.edu_min > config.edu_max) {
    throw std::invalid_argument("generator: empty EDU count range");
  }
  if (config.edu_max > static_cast<int>(atom_words().size())) {
    throw std::invalid_argument("generator: edu_max exceeds available condition atoms");
  }
  const double prior_sum = config.p_yes + config.p_no + config.p_inquire + config.p_irrelevant;
  if (!(prior_sum > 0.0)) throw std::invalid_argument("generator: decision priors sum to zero");
  std::vector<std::pair<RelationType, double>> rel_weights;
  double rel_total = 0.0;
  for (const auto& [rel, w] : config.relation_weights) {
    if (w < 0.0) throw std::invalid_argument("generator: negative relation weight");
    if (rel == RelationType::Alternation && w > 0.0) {
      throw std::invalid_argument(
          "generator: alternation weight must be 0; disjunctive groups are controlled by p_alternation");
    }
    if (w > 0.0) {
      rel_weights.emplace_back(rel, w);
      rel_total += w;
    }
  }
  if (rel_weights.empty()) throw std::invalid_argument("generator: relation weights sum to zero");

  Pcg32 rng(seed);
  std::vector<Example> out;
  out.reserve(config.n_examples);

  for (int index = 0; index < config.n_examples; ++index) {
    Example ex;
    ex.example_id = "synth-" + std::to_string(index);

    // Target decision from the configured priors.
    double u = rng.next_double() * prior_sum;
    Decision target = Decision::Irrelevant;
    if ((u -= config.p_yes) < 0.0) target = Decision::Yes;
    else if ((u -= config.p_no) < 0.0) target = Decision::No;
    else if ((u -= config.p_inquire) < 0.0) target = Decision::Inquire;

    const int n = config.edu_min + static_cast<int>(rng.next_below(
                                       static_cast<std::uint32_t>(config.edu_max - config.edu_min + 1)));
    const std::string topic = topic_words()[rng.next_below(static_cast<std::uint32_t>(topic_words().size()))];
    ex.tree_id = "tree-" + topic + "-" + std::to_string(index);

    std::vector<std::string> atoms = atom_words();
    rng.shuffle(atoms);
    atoms.resize(n);
    for (int k = 0; k < n; ++k) ex.rule_edus.push_back(make_edu(k, topic, atoms[k]));

    // Optional contiguous disjunctive group.
    std::vector<int> group;
    if (n >= 2 && rng.next_double() < config.p_alternation) {
      int size = 2;
      if (n >= 3 && rng.next_double() < 0.4) size = 3;
      const int start = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(n - size + 1)));
      for (int k = 0; k < size; ++k) group.push_back(start + k);
      for (std::size_t k = 0; k + 1 < group.size(); ++k) {
        ex.relation_links.push_back(DiscourseLink{group[k], group[k + 1], RelationType::Alternation});
      }
    }
    std::vector<bool> grouped(n, false);
    for (int m : group) grouped[m] = true;

    // Chain links between remaining adjacent EDUs, then an optional extra.
    for (int k = 0; k + 1 < n; ++k) {
      if (grouped[k] && grouped[k + 1]) continue;
      ex.relation_links.push_back(DiscourseLink{k, k + 1, sample_relation(rng, rel_weights, rel_total)});
    }
    if (n >= 3 && rng.next_double() < config.p_extra_link) {
      const int i = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(n - 2)));
      const int j = i + 2 + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(n - i - 2 + 1)));
      if (j < n) {
        ex.relation_links.push_back(DiscourseLink{
            i, j,
            rng.next_double() < 0.5 ? RelationType::Elaboration : RelationType::Background});
      }
    }

    // Elements: disjunctive group plus ungrouped singles.
    std::vector<Element> elements;
    if (!group.empty()) elements.push_back(Element{true, -1, group});
    for (int k = 0; k < n; ++k) {
      if (!grouped[k]) elements.push_back(Element{false, k, {}});
    }
    rng.shuffle(elements);

    ex.gold_entailment.assign(n, EntailmentState::Unmentioned);
    switch (target) {
      case Decision::Yes:
        for (const auto& el : elements) fill_element(rng, el, ElementStatus::Satisfied, ex.gold_entailment);
        break;
      case Decision::No: {
        fill_element(rng, elements[0], ElementStatus::Violated, ex.gold_entailment);
        for (std::size_t k = 1; k < elements.size(); ++k) {
          const double v = rng.next_double();
          const ElementStatus st = v < 0.55 ? ElementStatus::Satisfied
                                 : v < 0.75 ? ElementStatus::Violated
                                            : ElementStatus::Unresolved;
          fill_element(rng, elements[k], st, ex.gold_entailment);
        }
        break;
      }
      case Decision::Inquire: {
        fill_element(rng, elements[0], ElementStatus::Unresolved, ex.gold_entailment);
        for (std::size_t k = 1; k < elements.size(); ++k) {
          const bool second = rng.next_double() < config.p_second_blocker;
          fill_element(rng, elements[k], second ? ElementStatus::Unresolved : ElementStatus::Satisfied,
                       ex.gold_entailment);
        }
        break;
      }
      case Decision::Irrelevant:
        for (int k = 0; k < n; ++k) ex.gold_entailment[k] = sample_state(rng, 0.3, 0.2);
        break;
    }

    // Convey every resolved condition through the scenario or one history turn.
    std::vector<int> order(n);
    for (int k = 0; k < n; ++k) order[k] = k;
    rng.shuffle(order);
    TokenList scenario_facts;
    for (int k : order) {
      const EntailmentState st = ex.gold_entailment[k];
      if (st == EntailmentState::Unmentioned) continue;
      const bool positive = st == EntailmentState::Entailment;
      if (rng.next_double() < config.p_scenario_fact) {
        scenario_facts.push_back((positive ? "has_" : "not_") + atoms[k]);
      } else {
        ex.history.push_back(HistoryTurn{{"are", "you", atoms[k]}, positive});
      }
    }
    if (!scenario_facts.empty()) {
      ex.scenario.push_back("situation");
      for (auto& f : scenario_facts) ex.scenario.push_back(std::move(f));
    }

    if (target == Decision::Irrelevant) {
      std::string other = topic;
      while (other == topic) {
        other = topic_words()[rng.next_below(static_cast<std::uint32_t>(topic_words().size()))];
      }
      ex.question = make_unrelated_question(rng, other);
    } else {
      ex.question = make_question(rng, topic);
    }

    ex.gold_decision = decide_example(ex);
    if (ex.gold_decision != target) {
      throw std::runtime_error("generator: constructed example disagrees with its target decision");
    }
    if (ex.gold_decision == Decision::Inquire) {
      for (int k = 0; k < n; ++k) {
        if (ex.gold_entailment[k] == EntailmentState::Unmentioned) {
          ex.gold_span = GoldSpan{k, 0, static_cast<int>(ex.rule_edus[k].size()) - 1};
          break;
        }
      }
    }
    validate_example(ex);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace cmr
