#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace contcount::cli {

// Runs the benchmark CLI against explicit streams so tests can drive it
// in-process. `in` backs `--in -`, `out` backs `--out -`. Returns the
// process exit code: 0 success, 1 runtime error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::istream& in,
            std::ostream& out, std::ostream& err);

}  // namespace contcount::cli
