#include "dstg/manifest.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dstg {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string(buf);
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::ostringstream ss;
  ss << in.rdbuf();
  return hash_hex(ss.str());
}

std::string utc_timestamp() {
  std::time_t t;
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  } else {
    t = std::time(nullptr);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

RunManifest RunManifest::make(std::string command) {
  RunManifest m;
  m.command = std::move(command);
  m.timestamp_utc = utc_timestamp();
  return m;
}

nlohmann::json RunManifest::to_json() const {
  return nlohmann::json{{"command", command},
                        {"config_hash", config_hash},
                        {"dataset_hash", dataset_hash},
                        {"checkpoint_hash", checkpoint_hash},
                        {"version", version},
                        {"timestamp_utc", timestamp_utc}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.value("command", "");
  m.config_hash = j.value("config_hash", "");
  m.dataset_hash = j.value("dataset_hash", "");
  m.checkpoint_hash = j.value("checkpoint_hash", "");
  m.version = j.value("version", "");
  m.timestamp_utc = j.value("timestamp_utc", "");
  return m;
}

}  // namespace dstg
