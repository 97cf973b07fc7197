#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace contcount {

// Slack allowed on the squared L2 norm of a stream element, so that values
// like {0.6, 0.8} survive decimal-to-binary rounding.
inline constexpr double kElementNormSlack = 1e-9;

// zCDP privacy parameter. Invalid values are rejected at construction so a
// budget in hand is always usable.
struct PrivacyBudget {
  double rho;

  explicit PrivacyBudget(double rho_);
};

// Per-node Gaussian variance. variance == 0 is the zero-noise test mode.
struct NoiseScale {
  double variance = 0.0;
};

// variance = sensitivity_sq / (2 rho).
NoiseScale calibrate_gaussian(PrivacyBudget budget, double sensitivity_sq);

// (rho + 2 sqrt(rho ln(1/delta)), delta)-DP conversion. Convenience only.
double approx_dp_epsilon(PrivacyBudget budget, double delta);

// Thrown when a mechanism is stepped past the horizon it was built for.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws std::invalid_argument unless every coordinate is finite and in
// [0, 1] and the squared L2 norm is <= 1 (+ slack). dim must be >= 1.
void validate_element(std::span<const double> value);

// A validated stream element: d >= 1 coordinates, each in [0, 1], L2 norm
// <= 1. Immutable once constructed.
class StreamElement {
 public:
  explicit StreamElement(std::vector<double> value);
  static StreamElement scalar(double v);

  std::span<const double> value() const { return value_; }
  std::size_t dimension() const { return value_.size(); }

 private:
  std::vector<double> value_;
};

// Instrumentation counters for one step. `replacements` counts noise nodes
// retired this step (admissions that replace nothing, e.g. the very first
// batch, count as zero).
struct StepCounters {
  std::uint64_t step = 0;
  std::uint32_t replacements = 0;
  std::uint32_t live_nodes = 0;
};

struct MechanismOutput {
  std::vector<double> estimate;
  std::uint64_t step = 0;
  std::uint32_t replacements = 0;
  std::uint32_t live_nodes = 0;
};

}  // namespace contcount
