#include "cmr/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace cmr {

std::vector<double> finite_difference_gradient(const std::function<double()>& f, Tensor& param,
                                               double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_difference_gradient: eps must be positive");
  std::vector<double> grad(param.size());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param.data[i];
    param.data[i] = saved + eps;
    const double up = f();
    param.data[i] = saved - eps;
    const double down = f();
    param.data[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::runtime_error("finite_difference_gradient: objective returned a non-finite value");
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / denom;
}

GradCheckReport check_gradients(const std::string& name, const std::function<double()>& f,
                                Tensor& param, double eps, double tol) {
  GradCheckReport report;
  report.name = name;
  report.coordinates = static_cast<int>(param.size());
  if (param.grad.size() != param.size()) {
    throw std::invalid_argument("check_gradients: analytic gradient missing for " + name);
  }
  const std::vector<double> numeric = finite_difference_gradient(f, param, eps);
  for (std::size_t i = 0; i < param.size(); ++i) {
    report.max_rel_error = std::max(report.max_rel_error, relative_error(param.grad[i], numeric[i]));
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace cmr
