#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace voxtherm::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

nlohmann::json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; key order is sorted, so equal
/// documents serialize to equal bytes.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace voxtherm::io
