#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace capbound {

// FNV-1a over raw bytes, printed as 16 hex digits. Content addressing for
// reproducibility checks, not integrity against adversaries.
std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::uint64_t h);
std::string digest_file(const std::filesystem::path& path);

// One manifest per CLI run: the resolved configuration, input digests and
// output paths. Re-running with the same configuration and inputs must
// reproduce every report byte-for-byte; the manifest's timestamp is the only
// field allowed to differ.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config;                       // full resolved parameter set
  std::vector<std::pair<std::string, std::string>> inputs;  // path -> digest
  std::vector<std::string> outputs;
  std::string created;  // ISO-8601 UTC

  void add_input(const std::filesystem::path& path);
  std::string run_digest() const;  // over command + config + input digests
  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::string utc_timestamp();

// <root>/<command>/<timestamp>-<digest8>/ unless an explicit directory was
// requested. Creates the directory.
std::filesystem::path make_run_dir(const std::filesystem::path& root,
                                   const std::string& command,
                                   const std::string& digest8);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace capbound
