#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dslt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNonConvergence = 3;

// Entry point of the dslt tool; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// key = value lines, '#' starts a comment; keys take the long flag names
// with or without the leading dashes ("hurst = 0.3", "eps = 0.1,0.05").
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

}  // namespace dslt::cli
