#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

namespace vrag {

std::string read_file(const std::filesystem::path& path);

/// Write via temp file + rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Invoke fn(line_number, parsed_object) for every non-blank line of a
/// newline-delimited JSON file. Throws ParseError naming the line on bad JSON
/// or a non-object line.
void for_each_ndjson(const std::filesystem::path& path,
                     const std::function<void(std::size_t, const nlohmann::json&)>& fn);

} // namespace vrag
