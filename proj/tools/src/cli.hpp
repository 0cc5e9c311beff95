#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fogsim::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kCellFailed = 1;
inline constexpr int kBadFlags = 2;
inline constexpr int kInvalidInput = 3;
inline constexpr int kPlacementFailed = 4;

/// Entry point of the fogsim tool; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "a..b" or "a" into the inclusive list of integers.
std::vector<int> parse_range(const std::string& text);

}  // namespace fogsim::cli
