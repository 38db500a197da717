#include "citeassist/metadata.hpp"

#include <array>
#include <utility>

namespace citeassist {

namespace {

constexpr std::array<std::pair<Provenance, std::string_view>, 5> k_names = {{
    {Provenance::UserOverride, "user"},
    {Provenance::ExternalExtractor, "extractor"},
    {Provenance::FirstPageHeuristic, "heuristic"},
    {Provenance::PdfInfo, "pdf_info"},
    {Provenance::Fallback, "fallback"},
}};

}  // namespace

std::string_view to_string(Provenance p) noexcept {
  for (const auto& [value, name] : k_names) {
    if (value == p) return name;
  }
  return "fallback";
}

std::optional<Provenance> provenance_from_string(std::string_view s) noexcept {
  for (const auto& [value, name] : k_names) {
    if (name == s) return value;
  }
  return std::nullopt;
}

}  // namespace citeassist
