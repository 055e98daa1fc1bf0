// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "avprune/error.hpp"

namespace avprune::cli {

enum ExitCode : int {
    kOk = 0,
    kConfig = 1,
    kInfeasible = 2,
    kIo = 3,
    kSchema = 4,
};

/// Entry point for the `avprune` tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int exit_code_for(ErrorKind kind);

}  // namespace avprune::cli
