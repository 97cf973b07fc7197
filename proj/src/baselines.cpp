#include "contcount/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace contcount {

double naive_output_variance(std::uint64_t horizon, double rho) {
  PrivacyBudget budget(rho);
  if (horizon < 1) {
    throw std::invalid_argument("naive_output_variance: horizon must be >= 1");
  }
  return calibrate_gaussian(budget, static_cast<double>(horizon)).variance;
}

double naive_input_variance(std::uint64_t t, double rho) {
  PrivacyBudget budget(rho);
  if (t < 1) {
    throw std::invalid_argument("naive_input_variance: t must be >= 1");
  }
  return calibrate_gaussian(budget, static_cast<double>(t)).variance;
}

std::vector<double> toeplitz_coeffs(std::uint64_t horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("toeplitz_coeffs: horizon must be >= 1");
  }
  std::vector<double> c(horizon);
  c[0] = 1.0;
  for (std::uint64_t j = 1; j < horizon; ++j) {
    c[j] = c[j - 1] * (2.0 * static_cast<double>(j) - 1.0) /
           (2.0 * static_cast<double>(j));
  }
  return c;
}

double matrix_variance(std::uint64_t horizon, double rho, std::uint64_t t) {
  PrivacyBudget budget(rho);
  if (t < 1 || t > horizon) {
    throw std::out_of_range("matrix_variance: t must be in [1, horizon]");
  }
  const std::vector<double> c = toeplitz_coeffs(horizon);
  double total = 0.0;    // squared sensitivity: full column norm of R
  double through_t = 0.0;  // squared row norm of L's t-th row
  for (std::uint64_t j = 0; j < horizon; ++j) {
    const double sq = c[j] * c[j];
    total += sq;
    if (j < t) through_t += sq;
  }
  return calibrate_gaussian(budget, total).variance * through_t;
}

NaiveOutputMechanism::NaiveOutputMechanism(std::uint64_t horizon,
                                           PrivacyBudget budget,
                                           std::size_t dim,
                                           std::unique_ptr<NoiseSource> source)
    : NaiveOutputMechanism(
          horizon,
          calibrate_gaussian(budget, static_cast<double>(horizon)).variance,
          dim, source ? std::move(source) : make_secure_source()) {}

NaiveOutputMechanism NaiveOutputMechanism::zero_noise(std::uint64_t horizon,
                                                      std::size_t dim) {
  return NaiveOutputMechanism(horizon, 0.0, dim, nullptr);
}

NaiveOutputMechanism::NaiveOutputMechanism(std::uint64_t horizon,
                                           double step_variance,
                                           std::size_t dim,
                                           std::unique_ptr<NoiseSource> source)
    : CountingMechanism(horizon, dim),
      sigma_(std::sqrt(step_variance)),
      sum_(dim, 0.0),
      source_(std::move(source)) {}

double NaiveOutputMechanism::analytic_variance(std::uint64_t t) const {
  if (t < 1 || t > capacity()) {
    throw std::out_of_range("analytic_variance: t must be in [1, horizon]");
  }
  return sigma_ * sigma_;
}

StepCounters NaiveOutputMechanism::do_step(std::span<const double> x,
                                           std::span<double> estimate) {
  const std::uint64_t t = steps_taken() + 1;
  for (std::size_t c = 0; c < dimension(); ++c) {
    sum_[c] += x[c];
    const double noise =
        (sigma_ != 0.0 && source_) ? sigma_ * source_->standard_normal() : 0.0;
    estimate[c] = sum_[c] + noise;
  }
  return StepCounters{t, 0, 0};
}

NaiveInputMechanism::NaiveInputMechanism(std::uint64_t horizon,
                                         PrivacyBudget budget, std::size_t dim,
                                         std::unique_ptr<NoiseSource> source)
    : NaiveInputMechanism(horizon, calibrate_gaussian(budget, 1.0).variance,
                          dim,
                          source ? std::move(source) : make_secure_source()) {}

NaiveInputMechanism NaiveInputMechanism::zero_noise(std::uint64_t horizon,
                                                    std::size_t dim) {
  return NaiveInputMechanism(horizon, 0.0, dim, nullptr);
}

NaiveInputMechanism::NaiveInputMechanism(std::uint64_t horizon,
                                         double per_input_variance,
                                         std::size_t dim,
                                         std::unique_ptr<NoiseSource> source)
    : CountingMechanism(horizon, dim),
      sigma_(std::sqrt(per_input_variance)),
      noisy_sum_(dim, 0.0),
      source_(std::move(source)) {}

double NaiveInputMechanism::analytic_variance(std::uint64_t t) const {
  if (t < 1 || t > capacity()) {
    throw std::out_of_range("analytic_variance: t must be in [1, horizon]");
  }
  return sigma_ * sigma_ * static_cast<double>(t);
}

StepCounters NaiveInputMechanism::do_step(std::span<const double> x,
                                          std::span<double> estimate) {
  const std::uint64_t t = steps_taken() + 1;
  for (std::size_t c = 0; c < dimension(); ++c) {
    const double noise =
        (sigma_ != 0.0 && source_) ? sigma_ * source_->standard_normal() : 0.0;
    noisy_sum_[c] += x[c] + noise;
    estimate[c] = noisy_sum_[c];
  }
  return StepCounters{t, 0, 1};
}

ToeplitzMechanism::ToeplitzMechanism(std::uint64_t horizon,
                                     PrivacyBudget budget, std::size_t dim,
                                     std::unique_ptr<NoiseSource> source)
    : ToeplitzMechanism(horizon, false, budget.rho, dim,
                        source ? std::move(source) : make_secure_source()) {}

ToeplitzMechanism ToeplitzMechanism::zero_noise(std::uint64_t horizon,
                                                std::size_t dim) {
  return ToeplitzMechanism(horizon, true, 1.0, dim, nullptr);
}

ToeplitzMechanism::ToeplitzMechanism(std::uint64_t horizon, bool zero_noise,
                                     double rho, std::size_t dim,
                                     std::unique_ptr<NoiseSource> source)
    : CountingMechanism(horizon, dim),
      coeffs_(toeplitz_coeffs(horizon)),
      coeff_sq_prefix_(horizon + 1, 0.0),
      source_(std::move(source)) {
  for (std::uint64_t j = 0; j < horizon; ++j) {
    coeff_sq_prefix_[j + 1] = coeff_sq_prefix_[j] + coeffs_[j] * coeffs_[j];
  }
  if (zero_noise) {
    sigma_ = 0.0;
    inv_two_rho_ = 0.0;
  } else {
    // Each zeta carries the full squared sensitivity of the factorization.
    sigma_ = std::sqrt(
        calibrate_gaussian(PrivacyBudget(rho), coeff_sq_prefix_[horizon])
            .variance);
    inv_two_rho_ = 1.0 / (2.0 * rho);
  }
  sum_.assign(dim, 0.0);
  zetas_.reserve(zero_noise ? 0 : horizon * dim);
}

double ToeplitzMechanism::analytic_variance(std::uint64_t t) const {
  if (t < 1 || t > capacity()) {
    throw std::out_of_range("analytic_variance: t must be in [1, horizon]");
  }
  return coeff_sq_prefix_[capacity()] * coeff_sq_prefix_[t] * inv_two_rho_;
}

StepCounters ToeplitzMechanism::do_step(std::span<const double> x,
                                        std::span<double> estimate) {
  const std::uint64_t t = steps_taken() + 1;
  const std::size_t d = dimension();
  for (std::size_t c = 0; c < d; ++c) sum_[c] += x[c];
  if (sigma_ == 0.0 || !source_) {
    for (std::size_t c = 0; c < d; ++c) estimate[c] = sum_[c];
    return StepCounters{t, 0, 0};
  }
  zetas_.resize(t * d);
  for (std::size_t c = 0; c < d; ++c) {
    zetas_[(t - 1) * d + c] = sigma_ * source_->standard_normal();
  }
  // Correlated noise at t: sum_{j<t} c_j * zeta_{t-j}, O(t * dim).
  for (std::size_t c = 0; c < d; ++c) {
    double noise = 0.0;
    for (std::uint64_t j = 0; j < t; ++j) {
      noise += coeffs_[j] * zetas_[(t - 1 - j) * d + c];
    }
    estimate[c] = sum_[c] + noise;
  }
  return StepCounters{t, 0, static_cast<std::uint32_t>(t)};
}

}  // namespace contcount
