#pragma once

namespace stm {

/// Entry point for the stmkit command-line tool. Exit codes: 0 success,
/// 1 validation error, 2 numeric failure (including non-convergence under
/// --strict), 64 usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace stm
