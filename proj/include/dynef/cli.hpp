#pragma once

namespace dynef {

/// Entry point behind the `dynef` binary. Subcommands: train-ml,
/// train-bayes, sample, eval, gradcheck, encode. Exit codes: 0 ok,
/// 1 runtime error, 2 config/usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace dynef
