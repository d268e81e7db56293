#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "cmr/dataset.hpp"

namespace cmr {

// Knobs for the synthetic rule-document corpus. Decisions are deterministic
// functions of the generated structure: conjunctive conditions must all be
// entailed, disjunctive (alternation-linked) groups need one entailed member,
// any definite violation yields No, missing information yields Inquire, and a
// question about a different topic yields Irrelevant.
struct GeneratorConfig {
  int n_examples = 1000;
  int edu_min = 2;
  int edu_max = 4;

  // Target decision priors; normalized before sampling.
  double p_yes = 0.3;
  double p_no = 0.25;
  double p_inquire = 0.3;
  double p_irrelevant = 0.15;

  // Probability that an example contains one disjunctive group of 2-3 EDUs.
  double p_alternation = 0.35;
  // Probability that an extra Inquire blocker is added beyond the first.
  double p_second_blocker = 0.2;
  // Probability that a resolved condition is conveyed in the scenario rather
  // than as a dialog-history turn.
  double p_scenario_fact = 0.35;
  // Probability of one extra cosmetic non-adjacent link.
  double p_extra_link = 0.3;

  // Chain-link relation weights. Alternation must stay at 0 here: alternation
  // links carry disjunction semantics and are emitted only for groups.
  std::map<RelationType, double> relation_weights = {
      {RelationType::Continuation, 4.0}, {RelationType::Explanation, 2.0},
      {RelationType::Conditional, 1.0},  {RelationType::Contrast, 2.0},
      {RelationType::Comment, 1.0},
  };
};

std::vector<Example> generate_synthetic(const GeneratorConfig& config, std::uint64_t seed);

// Recomputes the decision from the entailment states, the alternation-group
// structure in the links, and question/rule topic agreement. Generated
// examples satisfy decide_example(ex) == ex.gold_decision.
Decision decide_example(const Example& ex);

Decision decide(const std::vector<EntailmentState>& states, const std::vector<DiscourseLink>& links,
                bool question_relevant);

// True when the question's topic token appears in the rule document.
bool question_matches_rule(const Example& ex);

}  // namespace cmr
