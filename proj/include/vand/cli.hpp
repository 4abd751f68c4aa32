#pragma once

#include <iosfwd>

namespace vand::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kOk = 0,
    kFailed = 1,     // every sample failed, or eval inputs are unusable
    kUsage = 2,      // bad flags, config, templates, dataset root or cache dir
    kTransport = 3,  // model server unreachable or speaking garbage
};

/// Entry point for `vand run|eval|cache`. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vand::cli
