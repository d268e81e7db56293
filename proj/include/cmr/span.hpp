#pragma once

#include <vector>

#include "cmr/dataset.hpp"
#include "cmr/tensor.hpp"

namespace cmr {

struct SpanParams {
  TensorPtr start_vector;  // (d x 1)
  TensorPtr end_vector;    // (d x 1)
};

struct SpanCandidate {
  int edu = 0;
  int start = 0;  // inclusive token offsets within the EDU
  int end = 0;
  double score = 0.0;

  bool same_span(const SpanCandidate& o) const {
    return edu == o.edu && start == o.start && end == o.end;
  }
};

// Token-level Levenshtein distance.
int token_edit_distance(const TokenList& a, const TokenList& b);

// The gold under-specified span: over all contiguous spans within single
// EDUs, the one with minimum edit distance to the follow-up question; ties go
// to the shortest span, then the earliest (edu, start).
SpanCandidate gold_span_label(const std::vector<TokenList>& rule_edus, const TokenList& followup_question);

enum class SpanScoreMode { Max, Min };

// Extractive prediction over per-EDU token representations: span (k, i, j)
// with i <= j scores start_vector . t_{k,i} + end_vector . t_{k,j}. Default is
// argmax; Min keeps the literal minimizing variant. Ties break on (k, i, j).
SpanCandidate extract_span(const std::vector<TensorPtr>& token_reps, const SpanParams& params,
                           SpanScoreMode mode = SpanScoreMode::Max);

struct SpanMetrics {
  double exact_match = 0.0;
  double token_f1 = 0.0;
};

// Exact match on (edu, start, end); F1 on token-position sets (positions in
// different EDUs never overlap).
SpanMetrics span_metrics(const std::vector<SpanCandidate>& predictions,
                         const std::vector<SpanCandidate>& golds);

}  // namespace cmr
