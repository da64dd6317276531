#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gtvc::cli {

// Runs one subcommand (validate, cluster, fit, iv-fit, shapley, simulate,
// replicate, plot). Returns the process exit code; errors are reported on
// `err` with a machine-parsable category line first.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gtvc::cli
