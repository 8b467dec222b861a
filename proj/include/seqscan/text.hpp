#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace seqscan::text {

// Decodes bytes as UTF-8, replacing every invalid sequence with U+FFFD.
std::string decode_utf8_lossy(std::string_view bytes);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string_view trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
std::string to_lower(std::string_view s);

// Lowercase hex of a byte string.
std::string hex(std::string_view bytes);

}  // namespace seqscan::text
