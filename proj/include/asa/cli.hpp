#pragma once

namespace asa {

// Entry point behind the asa binary; exposed so tests can drive subcommands
// in-process. Exit codes: 0 success, 1 runtime/precondition failure,
// 2 usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace asa
