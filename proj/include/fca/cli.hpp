#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fca::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;   // bad flags, bad or missing configuration
inline constexpr int kExitData = 3;     // malformed or inconsistent input files
inline constexpr int kExitCompute = 4;  // inputs valid but a score is undefined
inline constexpr int kExitIo = 5;       // filesystem failures

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "0..4" or "0,1,3" (ranges inclusive, may be mixed: "0..2,7").
std::vector<long long> parse_int_list(const std::string& text);

}  // namespace fca::cli
