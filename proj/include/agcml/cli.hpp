#pragma once

// Command-line front end: sweep -> synth -> split -> train -> eval -> report,
// plus the forced-index flip experiment. Each stage writes its artifacts and
// a manifest into the output directory; downstream stages verify it.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace agcml::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Missing, stale or tampered upstream stage output.
class StageDependencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs one invocation; `args` excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, const char* const* argv);

}  // namespace agcml::cli
