// Copyright 2026 The icsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return icsr::cli::main_entry(args, std::cout, std::cerr);
}
