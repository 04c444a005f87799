// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

namespace adacred::cli {

/// One manifest per run, written to the root of the output directory.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();  // every option, defaults materialized
  std::uint64_t seed = 0;
  std::string input_hash;  // SHA-1 over the input files' contents
  std::vector<std::string> inputs;
  std::vector<std::string> artifacts;
  std::string started;
  std::string finished;
};

inline constexpr const char* kManifestName = "manifest.json";

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

std::string sha1_hex(const std::string& bytes);
/// SHA-1 of the concatenated (path length, contents) of each file in order.
std::string hash_inputs(const std::vector<std::string>& paths);
std::string utc_timestamp();

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace adacred::cli
