#include "cmr/compute_graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmr {

namespace {

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
  if (a->shape != b->shape) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_to_string(a->shape) +
                                " vs " + shape_to_string(b->shape));
  }
}

}  // namespace

TensorPtr ComputeGraph::record(TensorPtr out, std::function<void()> back) {
  steps_.push_back(Step{out, std::move(back)});
  return steps_.back().out;
}

TensorPtr ComputeGraph::matmul(const TensorPtr& a, const TensorPtr& b) {
  const int n = a->rows(), k = a->cols(), k2 = b->rows(), m = b->cols();
  if (k != k2) {
    throw std::invalid_argument("matmul: inner dimensions disagree " + shape_to_string(a->shape) +
                                " vs " + shape_to_string(b->shape));
  }
  auto out = make_tensor({n, m});
  {
    const double* pa = a->data.data();
    const double* pb = b->data.data();
    double* po = out->data.data();
    for (int i = 0; i < n; ++i) {
      for (int p = 0; p < k; ++p) {
        const double av = pa[static_cast<std::size_t>(i) * k + p];
        if (av == 0.0) continue;
        const double* brow = pb + static_cast<std::size_t>(p) * m;
        double* orow = po + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
      }
    }
  }
  return record(out, [a, b, out, n, k, m] {
    a->ensure_grad();
    b->ensure_grad();
    const double* go = out->grad.data();
    const double* pa = a->data.data();
    const double* pb = b->data.data();
    double* ga = a->grad.data();
    double* gb = b->grad.data();
    // dA = dC * B^T, streaming B and dC rows.
    for (int i = 0; i < n; ++i) {
      const double* grow = go + static_cast<std::size_t>(i) * m;
      double* garow = ga + static_cast<std::size_t>(i) * k;
      for (int p = 0; p < k; ++p) {
        const double* brow = pb + static_cast<std::size_t>(p) * m;
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
        garow[p] += acc;
      }
    }
    // dB = A^T * dC, streaming dB and dC rows.
    for (int i = 0; i < n; ++i) {
      const double* arow = pa + static_cast<std::size_t>(i) * k;
      const double* grow = go + static_cast<std::size_t>(i) * m;
      for (int p = 0; p < k; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        double* gbrow = gb + static_cast<std::size_t>(p) * m;
        for (int j = 0; j < m; ++j) gbrow[j] += av * grow[j];
      }
    }
  });
}

TensorPtr ComputeGraph::transpose(const TensorPtr& x) {
  const int n = x->rows(), m = x->cols();
  auto out = make_tensor({m, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      out->data[static_cast<std::size_t>(j) * n + i] = x->data[static_cast<std::size_t>(i) * m + j];
  return record(out, [x, out, n, m] {
    x->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        x->grad[static_cast<std::size_t>(i) * m + j] += out->grad[static_cast<std::size_t>(j) * n + i];
  });
}

TensorPtr ComputeGraph::add(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "add");
  auto out = make_tensor(a->shape);
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] + b->data[i];
  return record(out, [a, b, out] {
    a->ensure_grad();
    b->ensure_grad();
    for (std::size_t i = 0; i < out->size(); ++i) {
      a->grad[i] += out->grad[i];
      b->grad[i] += out->grad[i];
    }
  });
}

TensorPtr ComputeGraph::sub(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "sub");
  auto out = make_tensor(a->shape);
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] - b->data[i];
  return record(out, [a, b, out] {
    a->ensure_grad();
    b->ensure_grad();
    for (std::size_t i = 0; i < out->size(); ++i) {
      a->grad[i] += out->grad[i];
      b->grad[i] -= out->grad[i];
    }
  });
}

TensorPtr ComputeGraph::mul(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "mul");
  auto out = make_tensor(a->shape);
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * b->data[i];
  return record(out, [a, b, out] {
    a->ensure_grad();
    b->ensure_grad();
    for (std::size_t i = 0; i < out->size(); ++i) {
      a->grad[i] += out->grad[i] * b->data[i];
      b->grad[i] += out->grad[i] * a->data[i];
    }
  });
}

TensorPtr ComputeGraph::relu(const TensorPtr& x) {
  auto out = make_tensor(x->shape);
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
  return record(out, [x, out] {
    x->ensure_grad();
    for (std::size_t i = 0; i < out->size(); ++i)
      if (x->data[i] > 0.0) x->grad[i] += out->grad[i];
  });
}

TensorPtr ComputeGraph::sigmoid(const TensorPtr& x) {
  auto out = make_tensor(x->shape);
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = 1.0 / (1.0 + std::exp(-x->data[i]));
  return record(out, [x, out] {
    x->ensure_grad();
    for (std::size_t i = 0; i < out->size(); ++i) {
      const double s = out->data[i];
      x->grad[i] += out->grad[i] * s * (1.0 - s);
    }
  });
}

TensorPtr ComputeGraph::scale(const TensorPtr& x, double c) {
  auto out = make_tensor(x->shape);
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = x->data[i] * c;
  return record(out, [x, out, c] {
    x->ensure_grad();
    for (std::size_t i = 0; i < out->size(); ++i) x->grad[i] += out->grad[i] * c;
  });
}

TensorPtr ComputeGraph::add_row_broadcast(const TensorPtr& x, const TensorPtr& row) {
  const int n = x->rows(), d = x->cols();
  if (row->rows() != 1 || row->cols() != d) {
    throw std::invalid_argument("add_row_broadcast: row must be (1 x cols)");
  }
  auto out = make_tensor(x->shape);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      out->data[static_cast<std::size_t>(i) * d + j] =
          x->data[static_cast<std::size_t>(i) * d + j] + row->data[j];
  return record(out, [x, row, out, n, d] {
    x->ensure_grad();
    row->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        const double g = out->grad[static_cast<std::size_t>(i) * d + j];
        x->grad[static_cast<std::size_t>(i) * d + j] += g;
        row->grad[j] += g;
      }
  });
}

TensorPtr ComputeGraph::mul_col_broadcast(const TensorPtr& x, const TensorPtr& col) {
  const int n = x->rows(), d = x->cols();
  if (col->rows() != n || col->cols() != 1) {
    throw std::invalid_argument("mul_col_broadcast: column must be (rows x 1)");
  }
  auto out = make_tensor(x->shape);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      out->data[static_cast<std::size_t>(i) * d + j] =
          x->data[static_cast<std::size_t>(i) * d + j] * col->data[i];
  return record(out, [x, col, out, n, d] {
    x->ensure_grad();
    col->ensure_grad();
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        const double g = out->grad[static_cast<std::size_t>(i) * d + j];
        x->grad[static_cast<std::size_t>(i) * d + j] += g * col->data[i];
        acc += g * x->data[static_cast<std::size_t>(i) * d + j];
      }
      col->grad[i] += acc;
    }
  });
}

TensorPtr ComputeGraph::scale_rows(const TensorPtr& x, std::vector<double> factors) {
  const int n = x->rows(), d = x->cols();
  if (static_cast<int>(factors.size()) != n) {
    throw std::invalid_argument("scale_rows: one factor per row required");
  }
  auto out = make_tensor(x->shape);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      out->data[static_cast<std::size_t>(i) * d + j] =
          x->data[static_cast<std::size_t>(i) * d + j] * factors[i];
  return record(out, [x, out, f = std::move(factors), n, d] {
    x->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        x->grad[static_cast<std::size_t>(i) * d + j] +=
            out->grad[static_cast<std::size_t>(i) * d + j] * f[i];
  });
}

TensorPtr ComputeGraph::reshape(const TensorPtr& x, std::vector<int> shape) {
  if (shape_numel(shape) != x->size()) {
    throw std::invalid_argument("reshape: element count must be preserved");
  }
  auto out = make_tensor(std::move(shape), x->data);
  return record(out, [x, out] {
    x->ensure_grad();
    for (std::size_t i = 0; i < out->size(); ++i) x->grad[i] += out->grad[i];
  });
}

TensorPtr ComputeGraph::gather_rows(const TensorPtr& x, std::vector<int> idx) {
  const int n = x->rows(), d = x->cols();
  for (int i : idx) {
    if (i < 0 || i >= n) throw std::invalid_argument("gather_rows: row index out of range");
  }
  auto out = make_tensor({static_cast<int>(idx.size()), d});
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (int j = 0; j < d; ++j)
      out->data[r * d + j] = x->data[static_cast<std::size_t>(idx[r]) * d + j];
  return record(out, [x, out, ids = std::move(idx), d] {
    x->ensure_grad();
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (int j = 0; j < d; ++j)
        x->grad[static_cast<std::size_t>(ids[r]) * d + j] += out->grad[r * d + j];
  });
}

TensorPtr ComputeGraph::scatter_sum_rows(const TensorPtr& x, std::vector<int> dst, int out_rows) {
  const int n = x->rows(), d = x->cols();
  if (static_cast<int>(dst.size()) != n) {
    throw std::invalid_argument("scatter_sum_rows: one destination per input row required");
  }
  for (int i : dst) {
    if (i < 0 || i >= out_rows) throw std::invalid_argument("scatter_sum_rows: destination out of range");
  }
  auto out = make_tensor({out_rows, d});
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < d; ++j)
      out->data[static_cast<std::size_t>(dst[r]) * d + j] += x->data[static_cast<std::size_t>(r) * d + j];
  return record(out, [x, out, ids = std::move(dst), n, d] {
    x->ensure_grad();
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < d; ++j)
        x->grad[static_cast<std::size_t>(r) * d + j] += out->grad[static_cast<std::size_t>(ids[r]) * d + j];
  });
}

TensorPtr ComputeGraph::concat_rows(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty input list");
  const int d = parts[0]->cols();
  int total = 0;
  for (const auto& p : parts) {
    if (p->cols() != d) throw std::invalid_argument("concat_rows: column counts disagree");
    total += p->rows();
  }
  auto out = make_tensor({total, d});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p->data.begin(), p->data.end(), out->data.begin() + offset);
    offset += p->size();
  }
  return record(out, [ps = parts, out] {
    std::size_t offset = 0;
    for (const auto& p : ps) {
      p->ensure_grad();
      for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] += out->grad[offset + i];
      offset += p->size();
    }
  });
}

TensorPtr ComputeGraph::concat_cols(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input list");
  const int n = parts[0]->rows();
  int total = 0;
  for (const auto& p : parts) {
    if (p->rows() != n) throw std::invalid_argument("concat_cols: row counts disagree");
    total += p->cols();
  }
  auto out = make_tensor({n, total});
  int c0 = 0;
  for (const auto& p : parts) {
    const int pc = p->cols();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < pc; ++j)
        out->data[static_cast<std::size_t>(i) * total + c0 + j] =
            p->data[static_cast<std::size_t>(i) * pc + j];
    c0 += pc;
  }
  return record(out, [ps = parts, out, n, total] {
    int c = 0;
    for (const auto& p : ps) {
      p->ensure_grad();
      const int pc = p->cols();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < pc; ++j)
          p->grad[static_cast<std::size_t>(i) * pc + j] +=
              out->grad[static_cast<std::size_t>(i) * total + c + j];
      c += pc;
    }
  });
}

TensorPtr ComputeGraph::mean_rows(const TensorPtr& x) {
  const int n = x->rows(), d = x->cols();
  auto out = make_tensor({1, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out->data[j] += x->data[static_cast<std::size_t>(i) * d + j];
  for (int j = 0; j < d; ++j) out->data[j] /= n;
  return record(out, [x, out, n, d] {
    x->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        x->grad[static_cast<std::size_t>(i) * d + j] += out->grad[j] / n;
  });
}

TensorPtr ComputeGraph::sum_all(const TensorPtr& x) {
  auto out = make_tensor({1, 1});
  for (double v : x->data) out->data[0] += v;
  return record(out, [x, out] {
    x->ensure_grad();
    for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += out->grad[0];
  });
}

TensorPtr ComputeGraph::masked_softmax(const TensorPtr& logits, const MaskMatrix& mask) {
  const int n = logits->rows(), d = logits->cols();
  if (mask.rows != n || mask.cols != d) {
    throw std::invalid_argument("masked_softmax: mask dimensions " + std::to_string(mask.rows) + "x" +
                                std::to_string(mask.cols) + " do not match logits " +
                                shape_to_string(logits->shape));
  }
  auto out = make_tensor(logits->shape);
  for (int i = 0; i < n; ++i) {
    const double* lrow = logits->data.data() + static_cast<std::size_t>(i) * d;
    const double* mrow = mask.values.data() + static_cast<std::size_t>(i) * d;
    double* orow = out->data.data() + static_cast<std::size_t>(i) * d;
    double mx = kNegInf;
    bool any = false;
    for (int j = 0; j < d; ++j) {
      if (mrow[j] == 0.0) {
        any = true;
        mx = std::max(mx, lrow[j]);
      }
    }
    if (!any) continue;  // fully masked row stays all-zero
    double denom = 0.0;
    for (int j = 0; j < d; ++j) {
      if (mrow[j] != 0.0) continue;
      const double e = std::exp(lrow[j] - mx);
      orow[j] = e;
      denom += e;
    }
    for (int j = 0; j < d; ++j) orow[j] /= denom;
  }
  return record(out, [logits, out, n, d] {
    logits->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const double* orow = out->data.data() + static_cast<std::size_t>(i) * d;
      const double* grow = out->grad.data() + static_cast<std::size_t>(i) * d;
      double* lrow = logits->grad.data() + static_cast<std::size_t>(i) * d;
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += orow[j] * grow[j];
      for (int j = 0; j < d; ++j) {
        if (orow[j] == 0.0) continue;
        lrow[j] += orow[j] * (grow[j] - dot);
      }
    }
  });
}

TensorPtr ComputeGraph::softmax_rows(const TensorPtr& logits) {
  return masked_softmax(logits, MaskMatrix::all_visible(logits->rows(), logits->cols()));
}

TensorPtr ComputeGraph::cross_entropy_rows(const TensorPtr& logits, std::vector<int> targets) {
  const int n = logits->rows(), k = logits->cols();
  if (static_cast<int>(targets.size()) != n) {
    throw std::invalid_argument("cross_entropy_rows: one target per row required");
  }
  for (int t : targets) {
    if (t < 0 || t >= k) throw std::invalid_argument("cross_entropy_rows: target class out of range");
  }
  auto out = make_tensor({1, 1});
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = logits->data.data() + static_cast<std::size_t>(i) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
    total += mx + std::log(denom) - row[targets[i]];
  }
  out->data[0] = total / n;
  return record(out, [logits, out, ts = std::move(targets), n, k] {
    logits->ensure_grad();
    const double g = out->grad[0] / n;
    for (int i = 0; i < n; ++i) {
      const double* row = logits->data.data() + static_cast<std::size_t>(i) * k;
      double* grow = logits->grad.data() + static_cast<std::size_t>(i) * k;
      double mx = row[0];
      for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
      double denom = 0.0;
      for (int j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
      for (int j = 0; j < k; ++j) {
        const double p = std::exp(row[j] - mx) / denom;
        grow[j] += g * (p - (j == ts[i] ? 1.0 : 0.0));
      }
    }
  });
}

void ComputeGraph::backward(const TensorPtr& loss, double seed) {
  if (!loss->is_scalar()) {
    throw std::invalid_argument("backward: loss must be a scalar, got " + shape_to_string(loss->shape));
  }
  loss->ensure_grad();
  loss->grad[0] += seed;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
    if (it->out->has_grad()) it->back();
  }
}

}  // namespace cmr
