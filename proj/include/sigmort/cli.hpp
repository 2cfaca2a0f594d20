#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sigmort {

/// Runs the command-line interface on `args` (without the program name).
/// Returns the process exit status: 0 success, 2 usage, 3 data, 4 numeric.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "1,5,10", "1-10" or "1..10" (and mixtures like "1-3,10").
std::vector<int> parse_horizons(const std::string& text);

/// Parses "1996:2015" or "1996-2015".
std::pair<int, int> parse_window(const std::string& text);

}  // namespace sigmort
