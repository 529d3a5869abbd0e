#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridres::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 parse, config or usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridres::cli
