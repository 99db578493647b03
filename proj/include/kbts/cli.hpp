#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kbts::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNoDiagnosis = 1;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitLoadFailure = 2;
inline constexpr int kExitUsage = 64;

/// Entry point of the kbts tool. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kbts::cli
