#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "contcount/mechanism.hpp"

namespace contcount {

// Recompute-with-fresh-noise baseline: var[M(t)] = T / (2 rho).
double naive_output_variance(std::uint64_t horizon, double rho);

// Noise-each-input baseline: var[M(t)] = t / (2 rho).
double naive_input_variance(std::uint64_t t, double rho);

// First column of the lower-triangular Toeplitz factor L (= R transposed)
// with L * R = all-ones lower-triangular matrix: c_0 = 1,
// c_j = c_{j-1} * (2j - 1) / (2j). Self-convolution of c is all ones.
std::vector<double> toeplitz_coeffs(std::uint64_t horizon);

// Estimate variance of the Toeplitz factorization mechanism:
// (sum_{j<T} c_j^2) * (sum_{j<t} c_j^2) / (2 rho). Requires 1 <= t <= T.
double matrix_variance(std::uint64_t horizon, double rho, std::uint64_t t);

// Releases count + fresh N(0, T/(2 rho)) each step; nothing is retained.
class NaiveOutputMechanism final : public CountingMechanism {
 public:
  NaiveOutputMechanism(std::uint64_t horizon, PrivacyBudget budget,
                       std::size_t dim = 1,
                       std::unique_ptr<NoiseSource> source = nullptr);
  static NaiveOutputMechanism zero_noise(std::uint64_t horizon,
                                         std::size_t dim = 1);

  std::string_view name() const override { return "naive_output"; }
  double analytic_variance(std::uint64_t t) const override;
  std::size_t live_noise_values() const override { return 0; }

 protected:
  StepCounters do_step(std::span<const double> x,
                       std::span<double> estimate) override;

 private:
  NaiveOutputMechanism(std::uint64_t horizon, double step_variance,
                       std::size_t dim, std::unique_ptr<NoiseSource> source);

  double sigma_;
  std::vector<double> sum_;  // exact running count
  std::unique_ptr<NoiseSource> source_;
};

// Adds N(0, 1/(2 rho)) to each input once and keeps only the noisy running
// sum; variance grows linearly in t.
class NaiveInputMechanism final : public CountingMechanism {
 public:
  NaiveInputMechanism(std::uint64_t horizon, PrivacyBudget budget,
                      std::size_t dim = 1,
                      std::unique_ptr<NoiseSource> source = nullptr);
  static NaiveInputMechanism zero_noise(std::uint64_t horizon,
                                        std::size_t dim = 1);

  std::string_view name() const override { return "naive_input"; }
  double analytic_variance(std::uint64_t t) const override;
  std::size_t live_noise_values() const override { return dimension(); }

 protected:
  StepCounters do_step(std::span<const double> x,
                       std::span<double> estimate) override;

 private:
  NaiveInputMechanism(std::uint64_t horizon, double per_input_variance,
                      std::size_t dim, std::unique_ptr<NoiseSource> source);

  double sigma_;
  std::vector<double> noisy_sum_;
  std::unique_ptr<NoiseSource> source_;
};

// Correlated-noise streamer for the Toeplitz factorization: estimate at t is
// count(t) + sum_{j<t} c_j * zeta_{t-j} with one fresh zeta per step. Not a
// streaming design: it keeps all t noise seeds and spends O(t * dim) per
// step. Exists for variance comparisons and as a simulation cross-check of
// matrix_variance, not for production use.
class ToeplitzMechanism final : public CountingMechanism {
 public:
  ToeplitzMechanism(std::uint64_t horizon, PrivacyBudget budget,
                    std::size_t dim = 1,
                    std::unique_ptr<NoiseSource> source = nullptr);
  static ToeplitzMechanism zero_noise(std::uint64_t horizon,
                                      std::size_t dim = 1);

  std::string_view name() const override { return "matrix"; }
  double analytic_variance(std::uint64_t t) const override;
  std::size_t live_noise_values() const override {
    return zetas_.size();
  }

 protected:
  StepCounters do_step(std::span<const double> x,
                       std::span<double> estimate) override;

 private:
  ToeplitzMechanism(std::uint64_t horizon, bool zero_noise, double rho,
                    std::size_t dim, std::unique_ptr<NoiseSource> source);

  std::vector<double> coeffs_;
  std::vector<double> coeff_sq_prefix_;  // coeff_sq_prefix_[t] = sum_{j<t} c_j^2
  double sigma_;                         // per-zeta sigma
  double inv_two_rho_;                   // 0 in zero-noise mode
  std::vector<double> sum_;
  std::vector<double> zetas_;  // step-major history, t * dim values
  std::unique_ptr<NoiseSource> source_;
};

}  // namespace contcount
