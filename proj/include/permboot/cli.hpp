#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace permboot::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kVerifyFailed = 4 };

// args[0] is the program name. Structured output goes to `out` only with
// --stdout; progress and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace permboot::cli
