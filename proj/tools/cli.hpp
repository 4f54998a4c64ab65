#pragma once

#include <iosfwd>

namespace gravicat::cli {

// Exit codes: 0 success, 2 input/validation error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gravicat::cli
