#include "contcount/core.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace contcount {

PrivacyBudget::PrivacyBudget(double rho_) : rho(rho_) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw std::invalid_argument(
        "PrivacyBudget: rho must be positive and finite");
  }
}

NoiseScale calibrate_gaussian(PrivacyBudget budget, double sensitivity_sq) {
  if (!(sensitivity_sq >= 0.0) || !std::isfinite(sensitivity_sq)) {
    throw std::invalid_argument(
        "calibrate_gaussian: sensitivity_sq must be nonnegative and finite");
  }
  return NoiseScale{sensitivity_sq / (2.0 * budget.rho)};
}

double approx_dp_epsilon(PrivacyBudget budget, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("approx_dp_epsilon: delta must be in (0, 1)");
  }
  return budget.rho + 2.0 * std::sqrt(budget.rho * std::log(1.0 / delta));
}

void validate_element(std::span<const double> value) {
  if (value.empty()) {
    throw std::invalid_argument("stream element: dimension must be >= 1");
  }
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double v = value[i];
    if (!std::isfinite(v)) {
      throw std::invalid_argument("stream element: coordinate " +
                                  std::to_string(i) + " is not finite");
    }
    if (v < 0.0 || v > 1.0) {
      throw std::invalid_argument("stream element: coordinate " +
                                  std::to_string(i) +
                                  " is outside [0, 1]: " + std::to_string(v));
    }
    norm_sq += v * v;
  }
  if (norm_sq > 1.0 + kElementNormSlack) {
    throw std::invalid_argument(
        "stream element: squared L2 norm exceeds 1: " +
        std::to_string(norm_sq));
  }
}

StreamElement::StreamElement(std::vector<double> value)
    : value_(std::move(value)) {
  validate_element(value_);
}

StreamElement StreamElement::scalar(double v) {
  return StreamElement(std::vector<double>{v});
}

}  // namespace contcount
