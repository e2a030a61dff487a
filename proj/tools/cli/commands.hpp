#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace asap::cli {

// Exit codes: 0 success, 1 runtime or input failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point shared by the binary and the tests; args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asap::cli
