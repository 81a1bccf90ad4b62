#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adaskip::bench {

/// Entry point of the adaskip tool. args excludes the program name.
/// Returns 0 on success, 2 on validation errors, 3 on runtime errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adaskip::bench
