#include "contcount/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace contcount {

namespace {

struct KindName {
  MechanismKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {MechanismKind::binary, "binary"},
    {MechanismKind::smooth, "smooth"},
    {MechanismKind::naive_input, "naive_input"},
    {MechanismKind::naive_output, "naive_output"},
    {MechanismKind::matrix, "matrix"},
};

}  // namespace

std::optional<MechanismKind> parse_mechanism_kind(std::string_view name) {
  for (const auto& e : kKindNames) {
    if (e.name == name) return e.kind;
  }
  return std::nullopt;
}

std::string_view mechanism_kind_name(MechanismKind kind) {
  for (const auto& e : kKindNames) {
    if (e.kind == kind) return e.name;
  }
  return "?";
}

const std::vector<MechanismKind>& all_mechanism_kinds() {
  static const std::vector<MechanismKind> kinds = {
      MechanismKind::binary, MechanismKind::smooth, MechanismKind::naive_input,
      MechanismKind::naive_output, MechanismKind::matrix};
  return kinds;
}

std::unique_ptr<CountingMechanism> make_mechanism(MechanismKind kind,
                                                  const MechanismConfig& cfg) {
  auto source = [&]() -> std::unique_ptr<NoiseSource> {
    if (cfg.zero_noise) return nullptr;
    if (cfg.seed) return make_seeded_source(*cfg.seed);
    return make_secure_source();
  };
  switch (kind) {
    case MechanismKind::binary:
      if (cfg.zero_noise) {
        return std::make_unique<BinaryMechanism>(
            BinaryMechanism::zero_noise(cfg.horizon, cfg.dim));
      }
      return std::make_unique<BinaryMechanism>(
          cfg.horizon, PrivacyBudget(cfg.rho), cfg.dim, source());
    case MechanismKind::smooth:
      if (cfg.zero_noise) {
        return std::make_unique<SmoothMechanism>(
            SmoothMechanism::zero_noise(cfg.horizon, cfg.dim));
      }
      return std::make_unique<SmoothMechanism>(
          cfg.horizon, PrivacyBudget(cfg.rho), cfg.dim, source());
    case MechanismKind::naive_input:
      if (cfg.zero_noise) {
        return std::make_unique<NaiveInputMechanism>(
            NaiveInputMechanism::zero_noise(cfg.horizon, cfg.dim));
      }
      return std::make_unique<NaiveInputMechanism>(
          cfg.horizon, PrivacyBudget(cfg.rho), cfg.dim, source());
    case MechanismKind::naive_output:
      if (cfg.zero_noise) {
        return std::make_unique<NaiveOutputMechanism>(
            NaiveOutputMechanism::zero_noise(cfg.horizon, cfg.dim));
      }
      return std::make_unique<NaiveOutputMechanism>(
          cfg.horizon, PrivacyBudget(cfg.rho), cfg.dim, source());
    case MechanismKind::matrix:
      if (cfg.zero_noise) {
        return std::make_unique<ToeplitzMechanism>(
            ToeplitzMechanism::zero_noise(cfg.horizon, cfg.dim));
      }
      return std::make_unique<ToeplitzMechanism>(
          cfg.horizon, PrivacyBudget(cfg.rho), cfg.dim, source());
  }
  throw std::invalid_argument("make_mechanism: unknown kind");
}

double analytic_variance(MechanismKind kind, std::uint64_t horizon, double rho,
                         std::uint64_t t) {
  switch (kind) {
    case MechanismKind::binary:
      return binary_variance(horizon, rho, t);
    case MechanismKind::smooth:
      if (t < 1 || t > horizon) {
        throw std::out_of_range("analytic_variance: t must be in [1, horizon]");
      }
      return smooth_variance(horizon, rho);
    case MechanismKind::naive_input:
      if (t < 1 || t > horizon) {
        throw std::out_of_range("analytic_variance: t must be in [1, horizon]");
      }
      return naive_input_variance(t, rho);
    case MechanismKind::naive_output:
      if (t < 1 || t > horizon) {
        throw std::out_of_range("analytic_variance: t must be in [1, horizon]");
      }
      return naive_output_variance(horizon, rho);
    case MechanismKind::matrix:
      return matrix_variance(horizon, rho, t);
  }
  throw std::invalid_argument("analytic_variance: unknown kind");
}

double max_variance(MechanismKind kind, std::uint64_t horizon, double rho) {
  switch (kind) {
    case MechanismKind::binary:
      return binary_max_variance(horizon, rho);
    case MechanismKind::smooth:
      return smooth_variance(horizon, rho);
    case MechanismKind::naive_input:
      return naive_input_variance(horizon, rho);
    case MechanismKind::naive_output:
      return naive_output_variance(horizon, rho);
    case MechanismKind::matrix:
      // Increasing in t, so the maximum sits at t = horizon.
      return matrix_variance(horizon, rho, horizon);
  }
  throw std::invalid_argument("max_variance: unknown kind");
}

std::vector<PlanNode> query_plan(const PathWord& query_word) {
  if (query_word.width > 63) {
    throw std::invalid_argument("query_plan: widths above 63 not supported");
  }
  std::vector<PlanNode> plan;
  // Interval-splitting descent: walk from the root interval [1, 2^h],
  // keeping the half indicated by each bit; a 1-bit emits the left half as
  // a node before descending right.
  std::uint64_t a = 1;
  for (int i = query_word.width - 1; i >= 0; --i) {
    const std::uint64_t half = std::uint64_t{1} << i;
    if (query_word.bit(i)) {
      plan.push_back(PlanNode{
          NodeId{query_word.bits >> i, query_word.width - i},
          LeafInterval{a, a + half - 1}});
      a += half;
    }
  }
  return plan;
}

namespace {

// Leaf (1-based) where element t is stored.
std::uint64_t element_leaf(MechanismKind kind, const TreeGeometry* geom,
                           std::uint64_t t) {
  if (kind == MechanismKind::binary) return t;
  return balanced_unrank(*geom, t - 1).bits + 1;
}

// Zero-noise instrumented run on the given stream; returns admitted ids
// after checking the released estimates against the exact prefix sums.
template <typename Mech>
std::vector<NodeId> recorded_run(Mech& mech, std::uint64_t horizon,
                                 std::uint64_t flip_at) {
  mech.enable_instrumentation();
  double expected = 0.0;
  double x = 0.0;
  double est = 0.0;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    x = (t == flip_at) ? 1.0 : 0.0;
    expected += x;
    mech.step_into(std::span<const double>(&x, 1), std::span<double>(&est, 1));
    if (est != expected) {
      throw std::logic_error(
          "flip_sensitivity: zero-noise run deviated from the exact count");
    }
  }
  if (mech.nodes().readmissions() != 0) {
    throw std::logic_error("flip_sensitivity: a node was admitted twice");
  }
  return mech.nodes().admitted_ids();
}

}  // namespace

unsigned flip_sensitivity(MechanismKind kind, std::uint64_t horizon,
                          std::uint64_t t) {
  if (t < 1 || t > horizon) {
    throw std::out_of_range("flip_sensitivity: t must be in [1, horizon]");
  }
  int height = 0;
  std::vector<NodeId> with_flip, without_flip;
  TreeGeometry geom{};
  if (kind == MechanismKind::binary) {
    height = binary_tree_height(horizon);
    auto a = BinaryMechanism::zero_noise(horizon);
    auto b = BinaryMechanism::zero_noise(horizon);
    with_flip = recorded_run(a, horizon, t);
    without_flip = recorded_run(b, horizon, 0);
  } else if (kind == MechanismKind::smooth) {
    geom = choose_height(horizon);
    height = geom.height;
    auto a = SmoothMechanism::zero_noise(horizon);
    auto b = SmoothMechanism::zero_noise(horizon);
    with_flip = recorded_run(a, horizon, t);
    without_flip = recorded_run(b, horizon, 0);
  } else {
    throw std::invalid_argument(
        "flip_sensitivity: only binary and smooth store partial sums");
  }
  // Node admissions are data-independent; the two runs must store the same
  // set of partial sums, differing only in value.
  if (with_flip != without_flip) {
    throw std::logic_error(
        "flip_sensitivity: node structure depended on the stream");
  }
  // A stored partial sum differs between the runs exactly when its leaf
  // interval contains the flipped element's leaf.
  const std::uint64_t leaf = element_leaf(
      kind, kind == MechanismKind::smooth ? &geom : nullptr, t);
  unsigned differing = 0;
  for (const NodeId& id : with_flip) {
    const LeafInterval iv = node_leaf_interval(id, height);
    if (iv.first <= leaf && leaf <= iv.last) ++differing;
  }
  return differing;
}

namespace {

struct BlockStats {
  std::uint64_t n = 0;
  std::vector<double> mean;
  std::vector<double> m2;
};

}  // namespace

VarianceReport empirical_variance(MechanismKind kind, std::uint64_t horizon,
                                  double rho, std::uint64_t trials,
                                  std::uint64_t seed, unsigned workers) {
  if (trials < 2) {
    throw std::invalid_argument("empirical_variance: trials must be >= 2");
  }
  PrivacyBudget check_rho(rho);  // validate eagerly, workers should not throw
  (void)check_rho;

  // Trials are grouped into fixed blocks merged in block order, so the
  // result is bit-identical for any worker count.
  const std::uint64_t blocks = std::min<std::uint64_t>(64, trials);
  const std::uint64_t per = trials / blocks;
  const std::uint64_t extra = trials % blocks;

  std::vector<BlockStats> stats(blocks);
  std::atomic<std::uint64_t> next_block{0};
  std::exception_ptr failure;
  std::mutex failure_lock;

  auto run_block = [&](std::uint64_t b) {
    BlockStats& s = stats[b];
    s.mean.assign(horizon, 0.0);
    s.m2.assign(horizon, 0.0);
    const std::uint64_t lo = b * per + std::min(b, extra);
    const std::uint64_t hi = lo + per + (b < extra ? 1 : 0);
    std::vector<double> est(1);
    for (std::uint64_t i = lo; i < hi; ++i) {
      MechanismConfig cfg;
      cfg.horizon = horizon;
      cfg.rho = rho;
      cfg.dim = 1;
      cfg.seed = derive_stream_seed(seed, i);
      auto mech = make_mechanism(kind, cfg);
      ++s.n;
      double count = 0.0;
      for (std::uint64_t t = 1; t <= horizon; ++t) {
        const double x = (t % 2 == 1) ? 1.0 : 0.0;
        count += x;
        mech->step_into(std::span<const double>(&x, 1),
                        std::span<double>(est));
        const double noise = est[0] - count;
        // Welford update.
        const double delta = noise - s.mean[t - 1];
        s.mean[t - 1] += delta / static_cast<double>(s.n);
        s.m2[t - 1] += delta * (noise - s.mean[t - 1]);
      }
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned n_workers = std::min<std::uint64_t>(
      workers == 0 ? hw : workers, blocks);

  if (n_workers <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::uint64_t b = next_block.fetch_add(1);
          if (b >= blocks) return;
          try {
            run_block(b);
          } catch (...) {
            std::lock_guard<std::mutex> g(failure_lock);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Chan's pairwise merge, strictly in block order.
  VarianceReport report;
  report.trials = trials;
  report.per_step.assign(horizon, 0.0);
  std::vector<double> mean(horizon, 0.0);
  std::vector<double> m2(horizon, 0.0);
  std::uint64_t n = 0;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    const BlockStats& s = stats[b];
    if (s.n == 0) continue;
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(s.n);
    const double nab = na + nb;
    for (std::uint64_t i = 0; i < horizon; ++i) {
      const double delta = s.mean[i] - mean[i];
      mean[i] += delta * (nb / nab);
      m2[i] += s.m2[i] + delta * delta * (na * nb / nab);
    }
    n += s.n;
  }
  for (std::uint64_t i = 0; i < horizon; ++i) {
    report.per_step[i] = m2[i] / static_cast<double>(trials - 1);
  }
  return report;
}

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must be in (0, 1)");
  }
  // Phi(z) = erfc(-z / sqrt(2)) / 2 is monotone; bisect to ~1e-13.
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    if (cdf < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double chi_square_quantile(double p, double df) {
  if (!(df > 0.0)) {
    throw std::invalid_argument("chi_square_quantile: df must be positive");
  }
  const double z = normal_quantile(p);
  const double a = 2.0 / (9.0 * df);
  const double cube = 1.0 - a + z * std::sqrt(a);
  return df * cube * cube * cube;
}

VarianceBand sample_variance_band(double variance, std::uint64_t trials,
                                  double confidence) {
  if (trials < 2) {
    throw std::invalid_argument("sample_variance_band: trials must be >= 2");
  }
  if (!(confidence > 0.0) || !(confidence < 1.0)) {
    throw std::invalid_argument(
        "sample_variance_band: confidence must be in (0, 1)");
  }
  const double df = static_cast<double>(trials - 1);
  const double alpha = 1.0 - confidence;
  return VarianceBand{
      variance * chi_square_quantile(alpha / 2.0, df) / df,
      variance * chi_square_quantile(1.0 - alpha / 2.0, df) / df,
  };
}

void RunAccounting::observe(const StepCounters& c, std::size_t live_floats) {
  ++steps;
  total_replacements += c.replacements;
  max_live_nodes = std::max(max_live_nodes, c.live_nodes);
  max_live_floats = std::max(max_live_floats, live_floats);
}

double RunAccounting::avg_replacements() const {
  if (steps == 0) return 0.0;
  return static_cast<double>(total_replacements) / static_cast<double>(steps);
}

}  // namespace contcount
