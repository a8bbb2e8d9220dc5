#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace dstg {

inline constexpr const char* kVersionString = "dstg/0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::string_view bytes);
// FNV-1a over a file's bytes; empty string when the file cannot be read.
std::string file_hash_hex(const std::string& path);

// Provenance block embedded in every artifact file. The timestamp honours
// SOURCE_DATE_EPOCH so regenerated artifacts stay byte-identical.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string dataset_hash;
  std::string checkpoint_hash;
  std::string version = kVersionString;
  std::string timestamp_utc;

  static RunManifest make(std::string command);
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::string utc_timestamp();

}  // namespace dstg
