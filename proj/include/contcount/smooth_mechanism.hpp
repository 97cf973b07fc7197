#pragma once

#include <cstdint>
#include <memory>

#include "contcount/bitcodec.hpp"
#include "contcount/mechanism.hpp"

namespace contcount {

// Estimate variance of the smooth mechanism at horizon T: with h from
// choose_height(T) and k = h/2, every step sums exactly h - k nodes of
// variance k/(2 rho), so var = (h - k) * k / (2 rho) independent of t.
double smooth_variance(std::uint64_t horizon, double rho);

// Exact total node replacements over a full balanced tree of height 2k
// (all C(2k, k) - 1 outputs): C(2k+1, k+1) - (2k+1). Requires 1 <= k <= 31.
std::uint64_t replacement_cost_total(int k);

// Streaming counter whose per-step error is identically distributed: element
// t is placed at the leaf whose path is the (t-1)-th smallest height-h word
// with k = h/2 zeros, so every query sums exactly h - k noisy nodes of equal
// variance. The live set after step t consists of the prefixes of the next
// element's path word that end in a 1-bit.
//
// A step retires the nodes below the first branch where the old and new path
// words diverge and admits the new word's nodes there; the count equals the
// trailing run of 1-bits of the old word, which is 1 on half of all steps
// and stays O(1) amortized. Space is O(height * dim).
class SmoothMechanism final : public CountingMechanism {
 public:
  // Geometry from choose_height(horizon); per-node variance k/(2 rho): one
  // element lands in exactly k stored partial sums. A null source defaults
  // to SecureNoiseSource.
  SmoothMechanism(std::uint64_t horizon, PrivacyBudget budget,
                  std::size_t dim = 1,
                  std::unique_ptr<NoiseSource> source = nullptr);

  static SmoothMechanism zero_noise(std::uint64_t horizon,
                                    std::size_t dim = 1);

  // General-geometry constructor (any zeros count, explicit node variance)
  // for tests and experiments; horizon must not exceed geom.capacity.
  static SmoothMechanism with_geometry(const TreeGeometry& geom,
                                       std::uint64_t horizon,
                                       double node_variance,
                                       std::size_t dim = 1,
                                       std::unique_ptr<NoiseSource> source =
                                           nullptr);

  std::string_view name() const override { return "smooth"; }
  double analytic_variance(std::uint64_t t) const override;
  std::size_t live_noise_values() const override;

  const TreeGeometry& geometry() const { return geom_; }
  double node_variance() const { return sigma_ * sigma_; }
  // Path word governing the live set: after t steps, the word of element
  // t + 1 (the next query's descent word).
  const PathWord& query_word() const { return word_; }

  const NodeStack& nodes() const { return stack_; }
  void enable_instrumentation() { stack_.enable_instrumentation(); }

 protected:
  StepCounters do_step(std::span<const double> x,
                       std::span<double> estimate) override;

 private:
  SmoothMechanism(const TreeGeometry& geom, std::uint64_t horizon,
                  double node_variance, std::size_t dim,
                  std::unique_ptr<NoiseSource> source);

  // Admits the nodes for v's set bits at positions <= hi_pos, shallowest
  // first so the stack's depth order is preserved.
  void push_new_nodes(const PathWord& v, int hi_pos);

  TreeGeometry geom_;
  double sigma_;
  PathWord word_;
  NodeStack stack_;
  std::unique_ptr<NoiseSource> source_;
};

}  // namespace contcount
