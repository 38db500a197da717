#include "pdf/encoding.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>

#include "citeassist/text_util.hpp"

namespace citeassist::pdf {

namespace {

struct GlyphName {
  std::string_view name;
  char32_t code;
};

#include "pdf/encoding_tables.inc"

std::optional<char32_t> parse_hex(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::uint32_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return static_cast<char32_t>(v);
}

}  // namespace

const CodeMap& base_encoding(std::string_view name) {
  if (name == "WinAnsiEncoding") return k_winansi;
  if (name == "MacRomanEncoding") return k_macroman;
  if (name == "PDFDocEncoding") return k_pdfdoc;
  if (name == "Symbol") return k_symbol;
  return k_standard;
}

std::optional<char32_t> glyph_to_unicode(std::string_view glyph) {
  if (auto dot = glyph.find('.'); dot != std::string_view::npos && dot > 0) glyph = glyph.substr(0, dot);
  auto it = std::lower_bound(k_glyph_names.begin(), k_glyph_names.end(), glyph,
                             [](const GlyphName& g, std::string_view n) { return g.name < n; });
  if (it != k_glyph_names.end() && it->name == glyph) return it->code;
  if (glyph.size() == 7 && glyph.substr(0, 3) == "uni") return parse_hex(glyph.substr(3));
  if (glyph.size() >= 5 && glyph.size() <= 7 && glyph[0] == 'u') return parse_hex(glyph.substr(1));
  return std::nullopt;
}

void append_text(std::string& out, char32_t cp) {
  switch (cp) {
    case 0xFB00: out += "ff"; return;
    case 0xFB01: out += "fi"; return;
    case 0xFB02: out += "fl"; return;
    case 0xFB03: out += "ffi"; return;
    case 0xFB04: out += "ffl"; return;
    case 0xFB06: out += "st"; return;
    case 0x00A0: out += ' '; return;
    default: text::append_utf8(out, cp);
  }
}

std::string decode_text_string(std::string_view bytes) {
  std::string out;
  if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0xFE &&
      static_cast<unsigned char>(bytes[1]) == 0xFF) {
    for (std::size_t i = 2; i + 1 < bytes.size(); i += 2) {
      char32_t unit = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
      if (unit >= 0xD800 && unit <= 0xDBFF && i + 3 < bytes.size()) {
        char32_t low = (static_cast<unsigned char>(bytes[i + 2]) << 8) | static_cast<unsigned char>(bytes[i + 3]);
        if (low >= 0xDC00 && low <= 0xDFFF) {
          unit = 0x10000 + ((unit - 0xD800) << 10) + (low - 0xDC00);
          i += 2;
        }
      }
      text::append_utf8(out, unit);
    }
    return out;
  }
  if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xEF\xBB\xBF") return std::string(bytes.substr(3));
  for (unsigned char c : bytes) {
    char32_t cp = k_pdfdoc[c];
    if (cp == 0 && c >= 0x20 && c < 0x7F) cp = c;
    if (cp == 0 && (c == '\n' || c == '\r' || c == '\t')) cp = c;
    if (cp != 0) text::append_utf8(out, cp);
  }
  return out;
}

std::string encode_winansi(std::string_view utf8) {
  std::string out;
  for (char32_t cp : text::decode_utf8(utf8)) {
    if (cp >= 0x20 && cp < 0x7F) {
      out += static_cast<char>(cp);
      continue;
    }
    auto it = std::find(k_winansi.begin() + 0x80, k_winansi.end(), cp);
    out += it != k_winansi.end() ? static_cast<char>(it - k_winansi.begin()) : '?';
  }
  return out;
}

}  // namespace citeassist::pdf
