// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ipd::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUnexpected = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kAgentFailure = 3;
inline constexpr int kIoError = 4;
inline constexpr int kAgentCheckFailed = 5;
inline constexpr int kBindError = 6;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace ipd::cli
