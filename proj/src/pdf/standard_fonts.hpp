#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace citeassist::pdf {

// Advance widths (1/1000 em, WinAnsi code order) for the standard Latin
// fonts. Common aliases such as Arial or TimesNewRoman,Bold are accepted.
const std::array<std::uint16_t, 256>* standard_font_widths(std::string_view base_font);

}  // namespace citeassist::pdf
