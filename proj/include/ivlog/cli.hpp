#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ivlog {

/// Entry point behind the `ivlog` binary. Exit codes: 0 success,
/// 1 comparison mismatch or inconsistency halt, 2 input error.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ivlog
