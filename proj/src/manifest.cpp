#include "capbound/manifest.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "capbound/errors.hpp"

namespace capbound {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "' for digest");
  std::ostringstream ss;
  ss << in.rdbuf();
  return digest_hex(fnv1a64(ss.str()));
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.emplace_back(path.string(), digest_file(path));
}

std::string RunManifest::run_digest() const {
  std::string material = command + "\n" + config.dump();
  for (const auto& [path, digest] : inputs) material += "\n" + digest;
  return digest_hex(fnv1a64(material));
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = config;
  nlohmann::ordered_json ins = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : inputs)
    ins.push_back({{"path", path}, {"digest", digest}});
  j["inputs"] = std::move(ins);
  j["outputs"] = outputs;
  j["run_digest"] = run_digest();
  j["created"] = created;
  return j;
}

void RunManifest::write(const std::filesystem::path& path) const {
  write_json(path, to_json());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::filesystem::path make_run_dir(const std::filesystem::path& root,
                                   const std::string& command,
                                   const std::string& digest8) {
  const auto dir = root / command / (utc_timestamp() + "-" + digest8);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace capbound
