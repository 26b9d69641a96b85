#pragma once

#include <map>
#include <string>
#include <vector>

namespace epcore::cli {

/// Exit codes: 0 success, 1 domain error, 2 configuration error.
int run(int argc, char** argv);

/// Library operations reachable from each subcommand; the test suite
/// audits that every operation appears at least once.
std::map<std::string, std::vector<std::string>> subcommand_operations();

/// Canonical list of public operations across all modules.
std::vector<std::string> all_operations();

} // namespace epcore::cli
