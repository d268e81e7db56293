#include "cmr/span.hpp"

#include <algorithm>
#include <stdexcept>

namespace cmr {

int token_edit_distance(const TokenList& a, const TokenList& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  std::vector<int> prev(m + 1), cur(m + 1);
  for (int j = 0; j <= m; ++j) prev[j] = j;
  for (int i = 1; i <= n; ++i) {
    cur[0] = i;
    for (int j = 1; j <= m; ++j) {
      const int subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

SpanCandidate gold_span_label(const std::vector<TokenList>& rule_edus,
                              const TokenList& followup_question) {
  if (followup_question.empty()) {
    throw std::invalid_argument("gold_span_label: empty follow-up question");
  }
  bool any = false;
  for (const auto& edu : rule_edus) any |= !edu.empty();
  if (!any) throw std::invalid_argument("gold_span_label: all rule EDUs are empty");

  SpanCandidate best;
  int best_distance = -1;
  int best_length = -1;
  for (int k = 0; k < static_cast<int>(rule_edus.size()); ++k) {
    const auto& edu = rule_edus[k];
    for (int i = 0; i < static_cast<int>(edu.size()); ++i) {
      TokenList span;
      for (int j = i; j < static_cast<int>(edu.size()); ++j) {
        span.push_back(edu[j]);
        const int distance = token_edit_distance(span, followup_question);
        const int length = j - i + 1;
        if (best_distance < 0 || distance < best_distance ||
            (distance == best_distance && length < best_length)) {
          best_distance = distance;
          best_length = length;
          best = SpanCandidate{k, i, j, static_cast<double>(distance)};
        }
      }
    }
  }
  return best;
}

SpanCandidate extract_span(const std::vector<TensorPtr>& token_reps, const SpanParams& params,
                           SpanScoreMode mode) {
  if (token_reps.empty()) throw std::invalid_argument("extract_span: no token representations");
  const int d = static_cast<int>(params.start_vector->size());

  SpanCandidate best;
  bool found = false;
  for (int k = 0; k < static_cast<int>(token_reps.size()); ++k) {
    const auto& reps = token_reps[k];
    if (!reps) continue;
    if (reps->cols() != d) throw std::invalid_argument("extract_span: representation width mismatch");
    const int len = reps->rows();
    std::vector<double> start_score(len), end_score(len);
    for (int i = 0; i < len; ++i) {
      double s = 0.0, e = 0.0;
      for (int j = 0; j < d; ++j) {
        s += reps->at(i, j) * params.start_vector->data[j];
        e += reps->at(i, j) * params.end_vector->data[j];
      }
      start_score[i] = s;
      end_score[i] = e;
    }
    for (int i = 0; i < len; ++i) {
      for (int j = i; j < len; ++j) {
        const double score = start_score[i] + end_score[j];
        const bool better = mode == SpanScoreMode::Max ? score > best.score : score < best.score;
        if (!found || better) {
          best = SpanCandidate{k, i, j, score};
          found = true;
        }
      }
    }
  }
  if (!found) throw std::invalid_argument("extract_span: no candidate spans");
  return best;
}

SpanMetrics span_metrics(const std::vector<SpanCandidate>& predictions,
                         const std::vector<SpanCandidate>& golds) {
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("span_metrics: prediction and gold counts disagree");
  }
  SpanMetrics metrics;
  if (predictions.empty()) return metrics;
  double em = 0.0, f1 = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const auto& g = golds[i];
    if (p.same_span(g)) em += 1.0;
    if (p.edu == g.edu) {
      const int lo = std::max(p.start, g.start);
      const int hi = std::min(p.end, g.end);
      const int overlap = std::max(0, hi - lo + 1);
      if (overlap > 0) {
        const double precision = static_cast<double>(overlap) / (p.end - p.start + 1);
        const double recall = static_cast<double>(overlap) / (g.end - g.start + 1);
        f1 += 2.0 * precision * recall / (precision + recall);
      }
    }
  }
  metrics.exact_match = em / predictions.size();
  metrics.token_f1 = f1 / predictions.size();
  return metrics;
}

}  // namespace cmr
