#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeassist/pdf/document.hpp"

namespace citeassist {

enum class Provenance { UserOverride, ExternalExtractor, FirstPageHeuristic, PdfInfo, Fallback };

std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> provenance_from_string(std::string_view s) noexcept;

// Merged bibliographic record. The date is kept at year + month
// granularity; day is always 1.
struct PreprintMetadata {
  std::string entry_type = "article";
  std::string title;
  std::vector<std::string> authors;
  CalendarDate date;
  int pages = 1;
  std::optional<std::string> venue;
  std::optional<std::string> doi;
  std::vector<std::string> keywords;
  // Additional BibTeX fields supplied by the user, passed through verbatim
  // (for example "confacronym" or "volume").
  std::map<std::string, std::string> extra_fields;
  // field name -> source of its value
  std::map<std::string, Provenance> provenance;

  bool operator==(const PreprintMetadata&) const = default;
};

struct ExtractorResult {
  std::optional<std::string> title;
  std::optional<std::vector<std::string>> authors;
  std::optional<CalendarDate> date;
  std::optional<std::vector<std::string>> keywords;

  bool operator==(const ExtractorResult&) const = default;
  bool empty() const { return !title && !authors && !date && !keywords; }
};

// User-supplied values; each present slot wins over every other source.
struct MetadataOverrides {
  std::optional<std::string> entry_type;
  std::optional<std::string> title;
  std::optional<std::vector<std::string>> authors;
  std::optional<int> year;
  std::optional<int> month;
  std::optional<int> pages;  // recorded, but pages always come from the document
  std::optional<std::string> venue;
  std::optional<std::string> doi;
  std::optional<std::vector<std::string>> keywords;
  std::map<std::string, std::string> extra_fields;

  bool operator==(const MetadataOverrides&) const = default;
};

}  // namespace citeassist
