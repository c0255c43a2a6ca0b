#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gemmsim {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int runtime_error = 1;
inline constexpr int usage_error = 2;  // bad flags, bad config, unparsable input
inline constexpr int functional_mismatch = 3;
}  // namespace exit_code

/// Entry point of the gemmsim tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gemmsim
