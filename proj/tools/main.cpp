// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "avprune/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return avprune::cli::run(args, std::cout, std::cerr);
}
