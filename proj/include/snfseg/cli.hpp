#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace snfseg::cli {

/// Entry point of the `snfseg` tool: subcommands segment, fuse, evaluate and
/// compare-distributions. Returns the process exit code
/// (0 ok, 1 usage, 2 input/parse, 3 numerical).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace snfseg::cli
