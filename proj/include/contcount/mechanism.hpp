#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "contcount/core.hpp"
#include "contcount/noise.hpp"

namespace contcount {

// Identifies a stored partial-sum node as a prefix of a path word. The
// prefix always ends in a 1-bit; the covered leaf interval is derived on
// demand rather than stored.
struct NodeId {
  std::uint64_t prefix_bits = 0;
  int prefix_len = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

struct NodeIdHash {
  std::size_t operator()(const NodeId& id) const;
};

// 1-based inclusive leaf range covered by a node in a tree of the given
// height. A prefix of length l and value q covers leaves
// [(q-1) * 2^(height-l) + 1, q * 2^(height-l)].
struct LeafInterval {
  std::uint64_t first = 0;
  std::uint64_t last = 0;

  friend bool operator==(const LeafInterval&, const LeafInterval&) = default;
};

LeafInterval node_leaf_interval(const NodeId& id, int height);

// The live set of noisy partial-sum nodes plus the exact running count.
// Entries are kept in strictly increasing prefix-length order (bottom to
// top), so retirement always pops the deepest entries. The deterministic
// count and the stochastic noise are stored separately; the released
// estimate is their sum, with the noise total maintained incrementally so a
// step costs O(nodes touched), not O(live nodes).
class NodeStack {
 public:
  explicit NodeStack(std::size_t dim);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dimension() const { return dim_; }
  const NodeId& id_at(std::size_t i) const { return ids_[i]; }
  std::span<const double> noise_at(std::size_t i) const;
  std::span<const double> noise_sum() const { return noise_sum_; }
  std::span<const double> true_count() const { return true_count_; }

  // Admits a node with fresh noise (dim draws of N(0, sigma^2)). sigma == 0
  // or a null source admits exact zeros. The new prefix must be strictly
  // deeper than the current top.
  void push(const NodeId& id, double sigma, NoiseSource* source);
  // Retires the deepest `count` entries permanently.
  void pop_deepest(std::size_t count);

  void add_to_count(std::span<const double> x);
  // out = true_count + noise_sum.
  void write_estimate(std::span<double> out) const;

  // Test instrumentation: records every admission and flags any NodeId that
  // is admitted twice. Off by default; no cost when disabled.
  void enable_instrumentation();
  bool instrumented() const { return instrumented_; }
  std::uint64_t readmissions() const { return readmissions_; }
  const std::vector<NodeId>& admitted_ids() const { return admitted_ids_; }
  std::span<const double> admitted_noise(std::size_t admission) const;

 private:
  std::size_t dim_;
  std::vector<NodeId> ids_;
  std::vector<double> noise_;  // ids_.size() * dim_, stack order
  std::vector<double> noise_sum_;
  std::vector<double> true_count_;

  bool instrumented_ = false;
  std::uint64_t readmissions_ = 0;
  std::vector<NodeId> admitted_ids_;
  std::vector<double> admitted_noise_;
  std::unordered_set<NodeId, NodeIdHash> seen_;
};

// A streaming counter: consumes one element per step, releases one estimate
// of the running prefix sum per step. Single-threaded state machine; movable
// between threads, never shared concurrently.
class CountingMechanism {
 public:
  virtual ~CountingMechanism() = default;

  virtual std::string_view name() const = 0;
  // Variance of estimate[c] - count[c] per coordinate at step t, for this
  // instance's actual noise scale (0 in zero-noise mode). 1 <= t <= capacity.
  virtual double analytic_variance(std::uint64_t t) const = 0;
  // Noise floats currently retained; the space figure of merit.
  virtual std::size_t live_noise_values() const = 0;

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t steps_taken() const { return steps_; }
  std::size_t dimension() const { return dim_; }

  // Core stepping API: validates the element, advances one step, writes the
  // estimate into `estimate` (size == dimension()). Throws CapacityError
  // past the horizon and std::invalid_argument on a bad element.
  StepCounters step_into(std::span<const double> x, std::span<double> estimate);

  // Convenience wrappers that allocate the output.
  MechanismOutput step(const StreamElement& x);
  MechanismOutput step(double scalar);

 protected:
  CountingMechanism(std::uint64_t capacity, std::size_t dim);
  CountingMechanism(CountingMechanism&&) = default;
  CountingMechanism& operator=(CountingMechanism&&) = default;

  virtual StepCounters do_step(std::span<const double> x,
                               std::span<double> estimate) = 0;

 private:
  std::uint64_t capacity_;
  std::size_t dim_;
  std::uint64_t steps_ = 0;
};

}  // namespace contcount
