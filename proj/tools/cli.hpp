// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace spansketch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs `spansketch <command> ...` writing to the given streams. Returns the
/// process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace spansketch::cli
