#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cmr/tensor.hpp"

namespace cmr {

// Central finite differences (f(p+eps) - f(p-eps)) / (2 eps) per coordinate.
// f must be deterministic and is re-evaluated with the parameter coordinate
// perturbed in place; the original value is restored afterwards.
std::vector<double> finite_difference_gradient(const std::function<double()>& f, Tensor& param,
                                               double eps);

// Relative error with a floor so that near-zero coordinates are compared
// absolutely: |a-b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-4);

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  int coordinates = 0;
  bool passed = false;
};

// Compares analytic gradients already stored in param.grad against the
// finite-difference oracle. The analytic pass must have run before the call.
GradCheckReport check_gradients(const std::string& name, const std::function<double()>& f,
                                Tensor& param, double eps, double tol);

}  // namespace cmr
