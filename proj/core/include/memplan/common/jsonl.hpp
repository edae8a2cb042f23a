#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memplan {

using json = nlohmann::json;

// Reads a line-delimited JSON file. Blank lines are skipped; a line that
// does not parse raises FormatError naming the file and line number.
std::vector<json> read_jsonl(const std::filesystem::path& path);

std::vector<json> parse_jsonl(const std::string& content, const std::string& origin);

// Serializes records one per line with '\n' endings.
std::string dump_jsonl(const std::vector<json>& records);

std::string read_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace memplan
