#pragma once

#include <cstdint>
#include <memory>

#include "contcount/bitcodec.hpp"
#include "contcount/mechanism.hpp"

namespace contcount {

// Tree height for a horizon of T steps: ceil(log2(T + 1)).
int binary_tree_height(std::uint64_t horizon);

// Largest popcount of any step index in [1, T].
int max_popcount_up_to(std::uint64_t horizon);

// Exact per-step estimate variance of the binary mechanism:
// height * popcount(t) / (2 rho). Requires 1 <= t <= T.
double binary_variance(std::uint64_t horizon, double rho, std::uint64_t t);

// Worst variance over all t in [1, T].
double binary_max_variance(std::uint64_t horizon, double rho);

// Classic binary-tree counter, left-children only. At step t the live nodes
// are exactly the prefixes of the height-padded bin(t) that end in a 1-bit;
// the step retires the countr_zero(t) deepest nodes and admits one. Noise is
// attached to a node when it first becomes live and retired with it; the
// tree is never materialized, so space stays O(height * dim).
class BinaryMechanism final : public CountingMechanism {
 public:
  // Per-node variance is height/(2 rho): the worst-case squared sensitivity
  // of one element across all arrival positions equals the height. A null
  // source defaults to SecureNoiseSource.
  BinaryMechanism(std::uint64_t horizon, PrivacyBudget budget,
                  std::size_t dim = 1,
                  std::unique_ptr<NoiseSource> source = nullptr);

  static BinaryMechanism zero_noise(std::uint64_t horizon,
                                    std::size_t dim = 1);

  std::string_view name() const override { return "binary"; }
  double analytic_variance(std::uint64_t t) const override;
  std::size_t live_noise_values() const override;

  int tree_height() const { return height_; }
  double node_variance() const { return sigma_ * sigma_; }

  const NodeStack& nodes() const { return stack_; }
  void enable_instrumentation() { stack_.enable_instrumentation(); }

 protected:
  StepCounters do_step(std::span<const double> x,
                       std::span<double> estimate) override;

 private:
  BinaryMechanism(std::uint64_t horizon, double node_variance,
                  std::size_t dim, std::unique_ptr<NoiseSource> source);

  int height_;
  double sigma_;
  NodeStack stack_;
  std::unique_ptr<NoiseSource> source_;
};

}  // namespace contcount
