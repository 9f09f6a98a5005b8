// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "ticon/cli/checks.hpp"

namespace ticon::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitNumerical = 4 };

/// 2 for configuration and registry errors, 3 for data and file format
/// errors, 4 for numerical failures.
int exit_code_for(const std::exception& e);

/// Runs one subcommand (argv[0] is the program name).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Fast invariant suite behind `selftest`; each check is logged as it
/// finishes.
std::vector<Check> run_selftest(std::ostream& log);

}  // namespace ticon::cli
