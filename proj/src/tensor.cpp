#include "cmr/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace cmr {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int e : shape) {
    if (e <= 0) throw std::invalid_argument("tensor extents must be positive");
    n *= static_cast<std::size_t>(e);
  }
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Tensor::Tensor(std::vector<int> s, double fill)
    : shape(std::move(s)), data(shape_numel(shape), fill) {}

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != shape_numel(shape)) {
    throw std::invalid_argument("tensor data length does not match shape " + shape_to_string(shape));
  }
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad.empty()) grad.assign(data.size(), 0.0);
}

TensorPtr make_tensor(std::vector<int> shape, double fill, bool requires_grad) {
  auto t = std::make_shared<Tensor>(std::move(shape), fill);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  auto t = std::make_shared<Tensor>(std::move(shape), std::move(data));
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

MaskMatrix::MaskMatrix(int r, int c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {
  if (rows <= 0 || cols <= 0 || values.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument("mask dimensions do not match value count");
  }
  for (double x : values) {
    if (x != 0.0 && x != kNegInf) {
      throw std::invalid_argument("mask entries must be 0 or kNegInf");
    }
  }
}

MaskMatrix MaskMatrix::all_visible(int r, int c) {
  return MaskMatrix(r, c, std::vector<double>(static_cast<std::size_t>(r) * c, 0.0));
}

}  // namespace cmr
