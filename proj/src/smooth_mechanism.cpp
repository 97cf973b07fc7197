#include "contcount/smooth_mechanism.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace contcount {

double smooth_variance(std::uint64_t horizon, double rho) {
  PrivacyBudget budget(rho);
  const TreeGeometry geom = choose_height(horizon);
  const double node_var =
      calibrate_gaussian(budget, static_cast<double>(geom.zeros)).variance;
  return node_var * geom.ones();
}

std::uint64_t replacement_cost_total(int k) {
  if (k < 1 || k > 31) {
    throw std::invalid_argument("replacement_cost_total: k must be in [1, 31]");
  }
  return binomial(2 * k + 1, k + 1) - static_cast<std::uint64_t>(2 * k + 1);
}

SmoothMechanism::SmoothMechanism(std::uint64_t horizon, PrivacyBudget budget,
                                 std::size_t dim,
                                 std::unique_ptr<NoiseSource> source)
    : SmoothMechanism(
          choose_height(horizon), horizon,
          calibrate_gaussian(budget,
                             static_cast<double>(choose_height(horizon).zeros))
              .variance,
          dim, source ? std::move(source) : make_secure_source()) {}

SmoothMechanism SmoothMechanism::zero_noise(std::uint64_t horizon,
                                            std::size_t dim) {
  return SmoothMechanism(choose_height(horizon), horizon, 0.0, dim, nullptr);
}

SmoothMechanism SmoothMechanism::with_geometry(
    const TreeGeometry& geom, std::uint64_t horizon, double node_variance,
    std::size_t dim, std::unique_ptr<NoiseSource> source) {
  return SmoothMechanism(geom, horizon, node_variance, dim, std::move(source));
}

SmoothMechanism::SmoothMechanism(const TreeGeometry& geom,
                                 std::uint64_t horizon, double node_variance,
                                 std::size_t dim,
                                 std::unique_ptr<NoiseSource> source)
    : CountingMechanism(horizon, dim),
      geom_(geom),
      sigma_(std::sqrt(node_variance)),
      word_(balanced_unrank(geom, 0)),
      stack_(dim),
      source_(std::move(source)) {
  if (geom_.ones() < 1) {
    throw std::invalid_argument(
        "SmoothMechanism: geometry needs at least one 1-bit per word");
  }
  if (horizon > geom_.capacity) {
    throw std::invalid_argument(
        "SmoothMechanism: horizon " + std::to_string(horizon) +
        " exceeds the geometry capacity " + std::to_string(geom_.capacity));
  }
}

double SmoothMechanism::analytic_variance(std::uint64_t t) const {
  if (t < 1 || t > capacity()) {
    throw std::out_of_range("analytic_variance: t must be in [1, horizon]");
  }
  return node_variance() * geom_.ones();
}

std::size_t SmoothMechanism::live_noise_values() const {
  return stack_.size() * dimension();
}

void SmoothMechanism::push_new_nodes(const PathWord& v, int hi_pos) {
  for (int p = hi_pos; p >= 0; --p) {
    if ((v.bits >> p) & 1u) {
      stack_.push(NodeId{v.bits >> p, geom_.height - p}, sigma_,
                  source_.get());
    }
  }
}

StepCounters SmoothMechanism::do_step(std::span<const double> x,
                                      std::span<double> estimate) {
  const std::uint64_t t = steps_taken() + 1;
  const PathWord next = next_balanced(word_);
  std::uint32_t replaced = 0;
  if (t == 1) {
    // First query: admit all of the word's nodes. Nothing retires, so this
    // batch is not counted as replacements.
    push_new_nodes(next, geom_.height - 1);
  } else {
    // The live nodes above the highest bit where the query word changes are
    // prefixes of both words and survive; everything at or below it turns
    // over. The old word's bits there are exactly its trailing ones block.
    const std::uint64_t diff = word_.bits ^ next.bits;
    const int hi = 63 - std::countl_zero(diff);
    const std::uint64_t below = word_mask(hi + 1);
    replaced = static_cast<std::uint32_t>(std::popcount(word_.bits & below));
    stack_.pop_deepest(replaced);
    push_new_nodes(next, hi);
  }
  word_ = next;
  stack_.add_to_count(x);
  stack_.write_estimate(estimate);
  return StepCounters{t, replaced, static_cast<std::uint32_t>(stack_.size())};
}

}  // namespace contcount
