#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace pfn {

/// Writes `text` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

std::string read_file(const std::filesystem::path& path);

/// Parses a JSON file; a missing or malformed file is a config error naming the path.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// 64-bit FNV-1a content fingerprint in hex, used in manifests.
std::string fingerprint(const std::string& bytes);

}  // namespace pfn
