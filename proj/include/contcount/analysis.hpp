#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "contcount/baselines.hpp"
#include "contcount/binary_mechanism.hpp"
#include "contcount/mechanism.hpp"
#include "contcount/smooth_mechanism.hpp"

namespace contcount {

enum class MechanismKind {
  binary,
  smooth,
  naive_input,
  naive_output,
  matrix,
};

std::optional<MechanismKind> parse_mechanism_kind(std::string_view name);
std::string_view mechanism_kind_name(MechanismKind kind);
const std::vector<MechanismKind>& all_mechanism_kinds();

struct MechanismConfig {
  std::uint64_t horizon = 1;
  double rho = 1.0;
  std::size_t dim = 1;
  std::optional<std::uint64_t> seed;  // absent = secure noise
  bool zero_noise = false;            // wins over seed
};

std::unique_ptr<CountingMechanism> make_mechanism(MechanismKind kind,
                                                  const MechanismConfig& cfg);

// Exact per-step and worst-case variance formulas, dispatched by kind.
double analytic_variance(MechanismKind kind, std::uint64_t horizon, double rho,
                         std::uint64_t t);
double max_variance(MechanismKind kind, std::uint64_t horizon, double rho);

// One node of a query's evaluation plan, in descent order (shallowest
// first). Computed by the interval-splitting descent on the query word, so
// it is independent of the mechanisms' incremental stack updates and serves
// as their oracle: the plan's ids are exactly the word's prefixes that end
// in a 1-bit, and the intervals tile [1, word value].
struct PlanNode {
  NodeId id;
  LeafInterval leaves;
};

std::vector<PlanNode> query_plan(const PathWord& query_word);

// Squared L2 sensitivity of one element position, measured: runs the chosen
// mechanism (binary or smooth) in zero-noise mode on the indicator stream
// e_t and on the all-zero stream over the full horizon, checks that both
// admit the same nodes, and counts the admitted nodes whose stored partial
// sum includes position t. A node's sum is frozen at admission (every later
// element lands past its leaf interval), so this equals the number of stored
// values that differ between the two runs. Requires 1 <= t <= T.
unsigned flip_sensitivity(MechanismKind kind, std::uint64_t horizon,
                          std::uint64_t t);

struct VarianceReport {
  std::vector<double> per_step;  // sample variance of estimate - count, t = 1..T
  std::uint64_t trials = 0;
};

// Sample variance of the released noise at every step over `trials`
// independent runs on a fixed alternating 1,0,1,0,... scalar stream. Trial i
// uses a noise seed derived from `seed` by derive_stream_seed(seed, i), so
// the result is identical for any worker count (workers = 0 picks one per
// hardware thread). trials >= 2.
VarianceReport empirical_variance(MechanismKind kind, std::uint64_t horizon,
                                  double rho, std::uint64_t trials,
                                  std::uint64_t seed, unsigned workers = 0);

// Standard normal quantile, |error| < 1e-12 (bisection on erfc).
double normal_quantile(double p);

// Chi-square quantile via the Wilson-Hilferty cube approximation; relative
// error well under 1e-6 for df >= 100.
double chi_square_quantile(double p, double df);

struct VarianceBand {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
};

// Two-sided acceptance band for a sample variance of `trials` draws from a
// normal with the given true variance: variance * chi2_q / (trials - 1) at
// the (1 -/+ confidence)/2 quantiles.
VarianceBand sample_variance_band(double variance, std::uint64_t trials,
                                  double confidence);

// Aggregates per-step counters over one mechanism run.
struct RunAccounting {
  std::uint64_t steps = 0;
  std::uint64_t total_replacements = 0;
  std::uint32_t max_live_nodes = 0;
  std::size_t max_live_floats = 0;

  void observe(const StepCounters& c, std::size_t live_floats);
  double avg_replacements() const;
};

}  // namespace contcount
