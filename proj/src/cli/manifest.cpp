// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/cli/manifest.hpp"

#include <openssl/sha.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adacred/errors.hpp"

namespace adacred::cli {

nlohmann::json manifest_to_json(const RunManifest& m) {
  return {{"command", m.command},       {"config", m.config},       {"seed", m.seed},
          {"input_hash", m.input_hash}, {"inputs", m.inputs},       {"artifacts", m.artifacts},
          {"started", m.started},       {"finished", m.finished}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.input_hash = j.value("input_hash", "");
    m.inputs = j.value("inputs", std::vector<std::string>{});
    m.artifacts = j.value("artifacts", std::vector<std::string>{});
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what(), 0);
  }
  return m;
}

void write_manifest(const RunManifest& m, const std::string& path) { write_file(path, manifest_to_json(m).dump(2) + "\n"); }

RunManifest read_manifest(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return manifest_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), e.byte);
  }
}

std::string sha1_hex(const std::string& bytes) {
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char c : digest) {
    out += hex[c >> 4];
    out += hex[c & 15];
  }
  return out;
}

std::string hash_inputs(const std::vector<std::string>& paths) {
  std::string blob;
  for (const auto& p : paths) {
    const std::string contents = read_file(p);
    blob += std::to_string(contents.size()) + ":" + contents;
  }
  return sha1_hex(blob);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DependencyError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw DependencyError("write to '" + path + "' failed");
}

}  // namespace adacred::cli
