#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "contcount/analysis.hpp"

namespace contcount::cli {

namespace {

// Post-parse validation failures that should exit like flag errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<MechanismKind> parse_kinds(const std::vector<std::string>& names) {
  if (names.empty()) {
    throw UsageError("at least one mechanism is required");
  }
  std::vector<MechanismKind> kinds;
  for (const auto& n : names) {
    auto kind = parse_mechanism_kind(n);
    if (!kind) {
      throw UsageError("unknown mechanism '" + n +
                       "' (expected binary, smooth, naive_input, "
                       "naive_output or matrix)");
    }
    kinds.push_back(*kind);
  }
  return kinds;
}

// Routes to the caller-provided stream for "-", else to a file.
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) {
    if (path == "-") {
      os_ = &fallback;
    } else {
      file_.open(path);
      if (!file_) {
        throw std::runtime_error("cannot open output file: " + path);
      }
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

class InputSource {
 public:
  InputSource(const std::string& path, std::istream& fallback) {
    if (path == "-") {
      is_ = &fallback;
    } else {
      file_.open(path);
      if (!file_) {
        throw std::runtime_error("cannot open input file: " + path);
      }
      is_ = &file_;
    }
  }
  std::istream& stream() { return *is_; }

 private:
  std::ifstream file_;
  std::istream* is_ = nullptr;
};

struct VarianceArgs {
  std::vector<std::string> mechanisms;
  std::uint64_t horizon = 0;
  double rho = 0.0;
  std::string mode = "analytic";
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
  std::string out_path = "-";
};

int run_variance(const VarianceArgs& a, std::ostream& fallback_out) {
  const auto kinds = parse_kinds(a.mechanisms);
  if (a.mode == "empirical" && a.trials < 2) {
    throw UsageError("--trials must be >= 2");
  }
  OutputTarget target(a.out_path, fallback_out);
  std::ostream& os = target.stream();
  os << "mechanism,t,variance\n";
  for (const auto kind : kinds) {
    if (a.mode == "analytic") {
      for (std::uint64_t t = 1; t <= a.horizon; ++t) {
        os << mechanism_kind_name(kind) << ',' << t << ','
           << fmt(analytic_variance(kind, a.horizon, a.rho, t)) << '\n';
      }
    } else {
      const VarianceReport report =
          empirical_variance(kind, a.horizon, a.rho, a.trials, a.seed);
      for (std::uint64_t t = 1; t <= a.horizon; ++t) {
        os << mechanism_kind_name(kind) << ',' << t << ','
           << fmt(report.per_step[t - 1]) << '\n';
      }
    }
  }
  return 0;
}

struct MaxvarArgs {
  std::vector<std::string> mechanisms;
  std::uint64_t horizon_max = 0;
  double rho = 0.0;
  std::string out_path = "-";
};

int run_maxvar(const MaxvarArgs& a, std::ostream& fallback_out) {
  const auto kinds = parse_kinds(a.mechanisms);
  OutputTarget target(a.out_path, fallback_out);
  std::ostream& os = target.stream();
  os << "mechanism,T,max_variance\n";
  for (const auto kind : kinds) {
    for (std::uint64_t T = 1; T <= a.horizon_max;
         T = (T > a.horizon_max / 2) ? a.horizon_max + 1 : T * 2) {
      os << mechanism_kind_name(kind) << ',' << T << ','
         << fmt(max_variance(kind, T, a.rho)) << '\n';
    }
  }
  return 0;
}

struct BenchArgs {
  std::vector<std::string> mechanisms;
  std::uint64_t horizon = 0;
  std::size_t dim = 1;
  unsigned repeats = 5;
  std::optional<std::uint64_t> seed;
  double rho = 1.0;
  std::string out_path = "-";
};

int run_bench(const BenchArgs& a, std::ostream& fallback_out) {
  const auto kinds = parse_kinds(a.mechanisms);
  if (a.repeats < 1) {
    throw UsageError("--repeats must be >= 1");
  }
  OutputTarget target(a.out_path, fallback_out);
  std::ostream& os = target.stream();
  os << "mechanism,T,dim,repeats,ns_per_step_median,max_live_floats,"
        "total_replacements,avg_replacements\n";
  std::vector<double> x(a.dim, 0.0);
  std::vector<double> est(a.dim, 0.0);
  for (const auto kind : kinds) {
    std::vector<double> per_step_ns(a.repeats, 0.0);
    RunAccounting acct;
    for (unsigned r = 0; r < a.repeats; ++r) {
      MechanismConfig cfg;
      cfg.horizon = a.horizon;
      cfg.rho = a.rho;
      cfg.dim = a.dim;
      if (a.seed) cfg.seed = derive_stream_seed(*a.seed, r);
      auto mech = make_mechanism(kind, cfg);
      acct = RunAccounting{};
      // One-hot rotating workload: unit mass in coordinate (t-1) mod dim.
      const auto start = std::chrono::steady_clock::now();
      for (std::uint64_t t = 1; t <= a.horizon; ++t) {
        const std::size_t hot = static_cast<std::size_t>((t - 1) % a.dim);
        x[hot] = 1.0;
        const StepCounters c = mech->step_into(x, est);
        x[hot] = 0.0;
        acct.observe(c, mech->live_noise_values());
      }
      const auto stop = std::chrono::steady_clock::now();
      per_step_ns[r] =
          static_cast<double>(
              std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start)
                  .count()) /
          static_cast<double>(a.horizon);
    }
    std::sort(per_step_ns.begin(), per_step_ns.end());
    const unsigned mid = a.repeats / 2;
    const double median =
        (a.repeats % 2 == 1)
            ? per_step_ns[mid]
            : 0.5 * (per_step_ns[mid - 1] + per_step_ns[mid]);
    os << mechanism_kind_name(kind) << ',' << a.horizon << ',' << a.dim << ','
       << a.repeats << ',' << fmt(median) << ',' << acct.max_live_floats << ','
       << acct.total_replacements << ',' << fmt(acct.avg_replacements())
       << '\n';
  }
  return 0;
}

struct StreamArgs {
  std::string mechanism;
  std::uint64_t horizon = 0;
  std::size_t dim = 1;
  double rho = 0.0;
  bool rho_set = false;
  bool zero_noise = false;
  std::optional<std::uint64_t> seed;
  std::string in_path = "-";
  std::string format = "csv";
  std::string out_path = "-";
};

std::vector<double> parse_element_line(const std::string& line,
                                       std::size_t dim,
                                       std::uint64_t line_no) {
  std::vector<double> vals;
  std::size_t begin = 0;
  while (begin <= line.size()) {
    std::size_t end = line.find(',', begin);
    if (end == std::string::npos) end = line.size();
    std::string field = line.substr(begin, end - begin);
    // Trim surrounding whitespace.
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    if (first == std::string::npos) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": empty field");
    }
    field = field.substr(first, last - first + 1);
    char* parse_end = nullptr;
    const double v = std::strtod(field.c_str(), &parse_end);
    if (parse_end != field.c_str() + field.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": cannot parse '" + field + "' as a number");
    }
    vals.push_back(v);
    if (end == line.size()) break;
    begin = end + 1;
  }
  if (vals.size() != dim) {
    throw std::runtime_error(
        "line " + std::to_string(line_no) + ": expected " +
        std::to_string(dim) + " comma-separated values, got " +
        std::to_string(vals.size()));
  }
  return vals;
}

int run_stream(const StreamArgs& a, std::istream& fallback_in,
               std::ostream& fallback_out) {
  const auto kind = parse_mechanism_kind(a.mechanism);
  if (!kind) {
    throw UsageError("unknown mechanism '" + a.mechanism +
                     "' (expected binary, smooth, naive_input, naive_output "
                     "or matrix)");
  }
  if (!a.zero_noise && !a.rho_set) {
    throw UsageError("--rho is required unless --zero-noise is given");
  }
  MechanismConfig cfg;
  cfg.horizon = a.horizon;
  cfg.rho = a.zero_noise ? 1.0 : a.rho;
  cfg.dim = a.dim;
  cfg.seed = a.seed;
  cfg.zero_noise = a.zero_noise;
  auto mech = make_mechanism(*kind, cfg);

  InputSource source(a.in_path, fallback_in);
  OutputTarget target(a.out_path, fallback_out);
  std::ostream& os = target.stream();

  std::vector<double> est(a.dim, 0.0);
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(source.stream(), line)) {
    ++line_no;
    const std::vector<double> x = parse_element_line(line, a.dim, line_no);
    StepCounters counters;
    try {
      counters = mech->step_into(x, est);
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    if (a.format == "csv") {
      for (std::size_t c = 0; c < a.dim; ++c) {
        os << (c ? "," : "") << fmt(est[c]);
      }
      os << '\n';
    } else {
      os << "{\"t\":" << counters.step << ",\"estimate\":[";
      for (std::size_t c = 0; c < a.dim; ++c) {
        os << (c ? "," : "") << fmt(est[c]);
      }
      os << "],\"replacements\":" << counters.replacements
         << ",\"live_nodes\":" << counters.live_nodes << "}\n";
    }
    os.flush();  // the estimate for step t must not wait for step t+1
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in,
            std::ostream& out, std::ostream& err) {
  CLI::App app{
      "Benchmark CLI for differentially private continual counting.\n"
      "Mechanisms: binary, smooth, naive_input, naive_output, matrix.\n"
      "All floats are printed with 17 significant digits. Exit codes:\n"
      "0 success, 1 runtime error, 2 usage error."};
  app.name("bench");
  app.require_subcommand(1);

  VarianceArgs va;
  auto* variance = app.add_subcommand(
      "variance",
      "Per-step estimate variance, CSV columns: mechanism,t,variance.\n"
      "Analytic mode evaluates exact formulas; empirical mode measures the\n"
      "sample variance over --trials seeded runs on a fixed alternating\n"
      "1,0,1,0,... stream.");
  variance->add_option("--mechanisms", va.mechanisms, "Comma-separated list")
      ->delimiter(',')
      ->required();
  variance->add_option("--T", va.horizon, "Stream horizon (steps)")
      ->check(CLI::PositiveNumber)
      ->required();
  variance->add_option("--rho", va.rho, "zCDP budget")
      ->check(CLI::PositiveNumber)
      ->required();
  variance->add_option("--mode", va.mode, "analytic|empirical")
      ->check(CLI::IsMember({"analytic", "empirical"}));
  variance->add_option("--trials", va.trials, "Empirical trials (default 1e5)");
  variance->add_option("--seed", va.seed, "Master seed for empirical mode");
  variance->add_option("--out", va.out_path, "Output file or - for stdout");

  MaxvarArgs ma;
  auto* maxvar = app.add_subcommand(
      "maxvar",
      "Worst-case variance over t for each horizon T in powers of two up\n"
      "to --Tmax. CSV columns: mechanism,T,max_variance.");
  maxvar->add_option("--mechanisms", ma.mechanisms, "Comma-separated list")
      ->delimiter(',')
      ->required();
  maxvar->add_option("--Tmax", ma.horizon_max, "Largest horizon")
      ->check(CLI::PositiveNumber)
      ->required();
  maxvar->add_option("--rho", ma.rho, "zCDP budget")
      ->check(CLI::PositiveNumber)
      ->required();
  maxvar->add_option("--out", ma.out_path, "Output file or - for stdout");

  BenchArgs ba;
  auto* bench = app.add_subcommand(
      "bench",
      "Wall-time and space accounting on a one-hot rotating stream. CSV\n"
      "columns: mechanism,T,dim,repeats,ns_per_step_median,max_live_floats,\n"
      "total_replacements,avg_replacements. Timing is the median over\n"
      "--repeats runs of (run wall time / T). The matrix mechanism stores\n"
      "O(T*dim) noise and costs O(t*dim) per step; expect it to be slow at\n"
      "large T.");
  bench->add_option("--mechanisms", ba.mechanisms, "Comma-separated list")
      ->delimiter(',')
      ->required();
  bench->add_option("--T", ba.horizon, "Stream horizon (steps)")
      ->check(CLI::PositiveNumber)
      ->required();
  bench->add_option("--dim", ba.dim, "Element dimension")
      ->check(CLI::PositiveNumber);
  bench->add_option("--repeats", ba.repeats, "Timing repeats (median)");
  std::uint64_t bench_seed = 0;
  auto* bench_seed_opt = bench->add_option(
      "--seed", bench_seed, "Seed noise deterministically (default: secure)");
  bench->add_option("--rho", ba.rho, "zCDP budget (default 1)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--out", ba.out_path, "Output file or - for stdout");

  StreamArgs sa;
  auto* stream = app.add_subcommand(
      "stream",
      "Read one element per line (dim comma-separated reals, each in [0,1],\n"
      "L2 norm <= 1) and emit one estimate line immediately per input line.\n"
      "csv format prints the estimate coordinates; jsonl adds step counters.");
  stream->add_option("--mechanism", sa.mechanism, "Mechanism name")
      ->required();
  stream->add_option("--T", sa.horizon, "Stream horizon (capacity)")
      ->check(CLI::PositiveNumber)
      ->required();
  stream->add_option("--dim", sa.dim, "Element dimension")
      ->check(CLI::PositiveNumber);
  auto* rho_opt = stream->add_option("--rho", sa.rho, "zCDP budget")
                      ->check(CLI::PositiveNumber);
  stream->add_flag("--zero-noise", sa.zero_noise,
                   "Disable noise (testing only; overrides --seed)");
  std::uint64_t stream_seed = 0;
  auto* stream_seed_opt = stream->add_option(
      "--seed", stream_seed, "Seed noise deterministically (default: secure)");
  stream->add_option("--in", sa.in_path, "Input file or - for stdin");
  stream->add_option("--format", sa.format, "csv|jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  stream->add_option("--out", sa.out_path, "Output file or - for stdout");

  std::vector<const char*> argv;
  argv.push_back("bench");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (variance->parsed()) return run_variance(va, out);
    if (maxvar->parsed()) return run_maxvar(ma, out);
    if (bench->parsed()) {
      if (bench_seed_opt->count() > 0) ba.seed = bench_seed;
      return run_bench(ba, out);
    }
    if (stream->parsed()) {
      sa.rho_set = rho_opt->count() > 0;
      if (stream_seed_opt->count() > 0) sa.seed = stream_seed;
      return run_stream(sa, in, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << "usage error: a subcommand is required\n";
  return 2;
}

}  // namespace contcount::cli
