#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace curvepat::cli {

// Orchestrates the subcommands
//   classify | standardize | constants | verify-decay | verify-ball |
//   config-integral | content | frostman | pipeline | fbm | avoid
// and writes a JSON run report to `out`.  Exit codes: 0 success, 1 usage or
// input error, 2 when a checked inequality in the report audit is violated.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// plot-ready CSV from the "series" block of a run report; header-only when
// the report carries no rows
std::string emit_plotdata(const std::string& report_json);

}  // namespace curvepat::cli
