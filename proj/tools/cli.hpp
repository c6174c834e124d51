#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace brickplan::cli {

enum ExitCode : int { kOk = 0, kVerdict = 1, kUsage = 2 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace brickplan::cli
