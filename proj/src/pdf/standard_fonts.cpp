#include "pdf/standard_fonts.hpp"

#include <string>

namespace citeassist::pdf {

namespace {

struct StandardFont {
  std::string_view name;
  const std::array<std::uint16_t, 256>* widths;
};

#include "pdf/standard_metrics.inc"

bool contains(std::string_view s, std::string_view part) { return s.find(part) != std::string_view::npos; }

std::string canonical_name(std::string_view name) {
  std::string family;
  if (contains(name, "Courier")) family = "Courier";
  else if (contains(name, "Times")) family = "Times";
  else if (contains(name, "Helvetica") || contains(name, "Arial")) family = "Helvetica";
  else return {};
  const bool bold = contains(name, "Bold") || contains(name, "Black");
  const bool italic = contains(name, "Italic") || contains(name, "Oblique");
  if (family == "Times") {
    if (bold && italic) return "Times-BoldItalic";
    if (bold) return "Times-Bold";
    if (italic) return "Times-Italic";
    return "Times-Roman";
  }
  if (bold && italic) return family + "-BoldOblique";
  if (bold) return family + "-Bold";
  if (italic) return family + "-Oblique";
  return family;
}

}  // namespace

const std::array<std::uint16_t, 256>* standard_font_widths(std::string_view base_font) {
  for (const auto& f : k_standard_fonts) {
    if (f.name == base_font) return f.widths;
  }
  const std::string alias = canonical_name(base_font);
  for (const auto& f : k_standard_fonts) {
    if (f.name == alias) return f.widths;
  }
  return nullptr;
}

}  // namespace citeassist::pdf
