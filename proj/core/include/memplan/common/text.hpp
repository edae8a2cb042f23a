#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace memplan::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Collapses every run of whitespace into one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

// Whitespace-split token proxy used for every budget in the project.
std::size_t count_tokens(std::string_view s);

// Splits on whitespace boundaries keeping the leading whitespace attached to
// each piece, so that concatenating the pieces restores `s` exactly.
std::vector<std::string> proxy_tokens(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

// Replaces every `{{name}}` slot. Unknown slots are left untouched.
std::string fill(std::string_view tmpl,
                 const std::vector<std::pair<std::string, std::string>>& slots);

// Content between the first `<tag>` and the following `</tag>`.
// Returns false when either delimiter is missing.
bool extract_tag(std::string_view s, std::string_view tag, std::string& out);

// First balanced `{...}` object in `s`, honoring JSON string quoting.
bool extract_json_object(std::string_view s, std::string& out);

}  // namespace memplan::text
