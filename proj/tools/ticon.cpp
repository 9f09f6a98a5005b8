// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "ticon/cli/app.hpp"

int main(int argc, char** argv) { return ticon::cli::run(argc, argv, std::cout, std::cerr); }
