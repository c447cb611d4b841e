#pragma once

#include <iosfwd>

namespace ternkern {

// Exit statuses of the ternkern tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitUsage = 2,
  kExitCorrupt = 3,  // I/O error or malformed input
};

// Entry point behind the ternkern binary; subcommands pack, verify, bench, info.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ternkern
