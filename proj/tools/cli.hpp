#pragma once

#include <ostream>

namespace crnc::cli {

// Exit codes: 0 pass, 1 check failure, 2 usage or parse error.
inline constexpr int kPass = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kUsage = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crnc::cli
