// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Subcommands of the `adacred` tool. Each command takes a fully resolved
// JSON config, writes its artifacts under config["out"] and returns the run
// manifest (also written to <out>/manifest.json).

#pragma once

#include <exception>
#include <json.hpp>
#include <string>
#include <vector>

#include "adacred/cli/manifest.hpp"

namespace adacred::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitDependency = 3,
  kExitFormat = 4,
  kExitNumerical = 5,
};

int exit_code_for(const std::exception& e);

/// Default config of a command with every option materialized.
nlohmann::json default_config(const std::string& command);

/// Runs `command` with `config` merged over the defaults.
RunManifest run_command(const std::string& command, const nlohmann::json& config);

/// Re-executes the run recorded in a manifest. `out` overrides the output
/// directory when non-empty.
RunManifest rerun_manifest(const std::string& manifest_path, const std::string& out);

/// Full command-line entry point; returns the process exit code.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace adacred::cli
