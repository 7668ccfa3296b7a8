#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lbm::cli {

/// Entry point behind the `lbm` executable. Returns the process exit status;
/// diagnostics go to `err`, human-readable progress and tables to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lbm::cli
