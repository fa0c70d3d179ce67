#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace ecgvae {

using ConfigMap = std::map<std::string, std::string>;

/// Flat `key = value` text: one pair per line, `#` starts a comment, blank
/// lines ignored, surrounding whitespace trimmed. Duplicate keys and lines
/// without `=` throw DataError naming the line.
ConfigMap parse_config(std::string_view text);
ConfigMap load_config(const std::filesystem::path& path);

}  // namespace ecgvae
