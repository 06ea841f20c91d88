#pragma once

#include <iosfwd>

namespace biolabel::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,  // fatal error while running a command
    kUsage = 2,    // bad command line
};

/// Entry point of the `biolabel` tool with injectable streams.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace biolabel::cli
