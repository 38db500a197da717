#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace citeassist::pdf {

using CodeMap = std::array<char32_t, 256>;

// Named base encodings; unknown names yield StandardEncoding.
const CodeMap& base_encoding(std::string_view name);

// Adobe Glyph List lookup plus the uniXXXX / uXXXX[XX] conventions.
// Suffixes after '.' or '_' variants (e.g. "a.sc") resolve to the base name.
std::optional<char32_t> glyph_to_unicode(std::string_view glyph);

// Appends cp to out as UTF-8, spelling out Latin ligatures (fi, ffl, ...).
void append_text(std::string& out, char32_t cp);

// Text strings outside content streams: UTF-16BE with BOM, UTF-8 with BOM,
// otherwise PDFDocEncoding.
std::string decode_text_string(std::string_view bytes);

// UTF-8 -> WinAnsiEncoding bytes for the standard fonts; unmappable code
// points become '?'.
std::string encode_winansi(std::string_view utf8);

}  // namespace citeassist::pdf
