#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace cmr {

// Finite stand-in for -infinity. Keeping it finite means masked logits pass
// through max-subtraction and exp() without ever producing NaN.
inline constexpr double kNegInf = -1e9;

// Dense row-major tensor of doubles. Tensors are viewed as (rows x cols)
// matrices by every operation: rows is the leading extent, cols the product
// of the rest. Gradient storage appears the first time backward() reaches
// the tensor and always matches the data shape.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<int> s, double fill);
  Tensor(std::vector<int> s, std::vector<double> d);

  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const {
    int c = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return c;
  }
  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  void ensure_grad();
  void zero_grad();
  bool has_grad() const { return !grad.empty(); }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<int> shape, double fill = 0.0, bool requires_grad = false);
TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);

// Additive attention mask: every entry is exactly 0 (visible) or kNegInf
// (masked). Construction validates the two-value invariant.
struct MaskMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  MaskMatrix() = default;
  MaskMatrix(int r, int c, std::vector<double> v);

  static MaskMatrix all_visible(int r, int c);

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  bool masked(int r, int c) const { return at(r, c) != 0.0; }
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace cmr
