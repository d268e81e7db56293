#pragma once

#include <functional>
#include <vector>

#include "cmr/tensor.hpp"

namespace cmr {

// Reverse-mode tape. Each arithmetic call records the output tensor together
// with a closure implementing the local backward rule; the recording order is
// topological by construction (an operation's inputs already exist when it is
// recorded). backward() seeds the loss gradient and replays the tape in
// reverse, accumulating additively across fan-out.
//
// One graph is single-threaded; independent graphs never share mutable state
// (parameters are shared read-only during the forward pass, and gradient
// accumulation into them is serialized by the caller).
class ComputeGraph {
 public:
  // ---- matrix products ----
  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr transpose(const TensorPtr& x);

  // ---- elementwise (matching shapes) ----
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr relu(const TensorPtr& x);
  TensorPtr sigmoid(const TensorPtr& x);
  TensorPtr scale(const TensorPtr& x, double c);

  // ---- broadcasts ----
  TensorPtr add_row_broadcast(const TensorPtr& x, const TensorPtr& row);   // (n x d) + (1 x d)
  TensorPtr mul_col_broadcast(const TensorPtr& x, const TensorPtr& col);   // (n x d) * (n x 1)
  TensorPtr scale_rows(const TensorPtr& x, std::vector<double> factors);   // constant per-row factors

  // ---- structure ----
  TensorPtr reshape(const TensorPtr& x, std::vector<int> shape);
  TensorPtr gather_rows(const TensorPtr& x, std::vector<int> idx);
  TensorPtr scatter_sum_rows(const TensorPtr& x, std::vector<int> dst, int out_rows);
  TensorPtr concat_rows(const std::vector<TensorPtr>& parts);
  TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
  TensorPtr mean_rows(const TensorPtr& x);   // (n x d) -> (1 x d)
  TensorPtr sum_all(const TensorPtr& x);     // -> (1 x 1)

  // ---- softmax family ----
  // Row-wise softmax over unmasked positions, stabilized by max-subtraction.
  // Masked positions get exactly 0; a fully masked row yields the all-zero row.
  TensorPtr masked_softmax(const TensorPtr& logits, const MaskMatrix& mask);
  TensorPtr softmax_rows(const TensorPtr& logits);

  // Mean over rows of (logsumexp(row) - row[target]). Backward is the
  // classic (softmax - one_hot) / n rule.
  TensorPtr cross_entropy_rows(const TensorPtr& logits, std::vector<int> targets);

  // Seeds d(loss)/d(loss) = seed and replays the tape in reverse. The loss
  // must be a scalar produced by this graph.
  void backward(const TensorPtr& loss, double seed = 1.0);

  std::size_t recorded_ops() const { return steps_.size(); }

 private:
  struct Step {
    TensorPtr out;
    std::function<void()> back;
  };
  std::vector<Step> steps_;

  TensorPtr record(TensorPtr out, std::function<void()> back);
};

}  // namespace cmr
