// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/cli/commands.hpp"

int main(int argc, char** argv) { return adacred::cli::run_cli(argc, argv); }
