#include "contcount/binary_mechanism.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace contcount {

int binary_tree_height(std::uint64_t horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("binary_tree_height: horizon must be >= 1");
  }
  // ceil(log2(T + 1)) == bit_width(T).
  return std::bit_width(horizon);
}

int max_popcount_up_to(std::uint64_t horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("max_popcount_up_to: horizon must be >= 1");
  }
  // The richest index <= T either is T itself or clears one set bit of T
  // and saturates everything below it.
  int best = std::popcount(horizon);
  for (int p = 0; p < 64; ++p) {
    if ((horizon >> p) & 1u) {
      best = std::max(best, std::popcount(horizon >> p) - 1 + p);
    }
  }
  return best;
}

double binary_variance(std::uint64_t horizon, double rho, std::uint64_t t) {
  PrivacyBudget budget(rho);
  if (t < 1 || t > horizon) {
    throw std::out_of_range("binary_variance: t must be in [1, horizon]");
  }
  const double node_var =
      calibrate_gaussian(budget, static_cast<double>(binary_tree_height(horizon)))
          .variance;
  return node_var * std::popcount(t);
}

double binary_max_variance(std::uint64_t horizon, double rho) {
  PrivacyBudget budget(rho);
  const double node_var =
      calibrate_gaussian(budget, static_cast<double>(binary_tree_height(horizon)))
          .variance;
  return node_var * max_popcount_up_to(horizon);
}

BinaryMechanism::BinaryMechanism(std::uint64_t horizon, PrivacyBudget budget,
                                 std::size_t dim,
                                 std::unique_ptr<NoiseSource> source)
    : BinaryMechanism(
          horizon,
          calibrate_gaussian(budget,
                             static_cast<double>(binary_tree_height(horizon)))
              .variance,
          dim, source ? std::move(source) : make_secure_source()) {}

BinaryMechanism BinaryMechanism::zero_noise(std::uint64_t horizon,
                                            std::size_t dim) {
  return BinaryMechanism(horizon, 0.0, dim, nullptr);
}

BinaryMechanism::BinaryMechanism(std::uint64_t horizon, double node_variance,
                                 std::size_t dim,
                                 std::unique_ptr<NoiseSource> source)
    : CountingMechanism(horizon, dim),
      height_(binary_tree_height(horizon)),
      sigma_(std::sqrt(node_variance)),
      stack_(dim),
      source_(std::move(source)) {}

double BinaryMechanism::analytic_variance(std::uint64_t t) const {
  if (t < 1 || t > capacity()) {
    throw std::out_of_range("analytic_variance: t must be in [1, horizon]");
  }
  return node_variance() * std::popcount(t);
}

std::size_t BinaryMechanism::live_noise_values() const {
  return stack_.size() * dimension();
}

StepCounters BinaryMechanism::do_step(std::span<const double> x,
                                      std::span<double> estimate) {
  const std::uint64_t t = steps_taken() + 1;
  // bin(t) = bin(t - 1) + 1: the trailing ones of bin(t - 1) collapse into
  // a single new 1 at position j, so the j deepest nodes retire and one
  // node (prefix of bin(t) down to that bit) is admitted.
  const int j = std::countr_zero(t);
  stack_.pop_deepest(static_cast<std::size_t>(j));
  stack_.push(NodeId{t >> j, height_ - j}, sigma_, source_.get());
  stack_.add_to_count(x);
  stack_.write_estimate(estimate);
  return StepCounters{t, static_cast<std::uint32_t>(j),
                      static_cast<std::uint32_t>(stack_.size())};
}

}  // namespace contcount
