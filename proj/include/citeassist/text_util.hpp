#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small UTF-8 and ASCII helpers shared by the text-facing modules.
namespace citeassist::text {

void append_utf8(std::string& out, char32_t cp);

// Invalid sequences decode to U+FFFD, one per offending byte.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

// Maps Latin letters with diacritics to their base ASCII letters
// (é -> e, ß -> ss, Ø -> O). Code points without a mapping pass through.
std::string fold_to_ascii(std::string_view utf8);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
// Trims and collapses every whitespace run to one space.
std::string normalize_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

bool starts_with_ci(std::string_view s, std::string_view prefix);

}  // namespace citeassist::text
