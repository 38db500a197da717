#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "citeassist/keywords.hpp"
#include "citeassist/metadata.hpp"
#include "citeassist/pdf/document.hpp"

namespace citeassist::extraction {

// Title and authors guessed from the first page's runs. The title is the
// longest group of consecutive largest-font lines in the top half of the
// page; authors come from the lines just below it.
ExtractorResult extract_first_page_metadata(const pdf::PageContent& page, std::string_view filename = {});

// Sends the PDF to a Grobid-compatible header service
// (POST {endpoint}/api/processHeaderDocument, multipart field "input").
// Errors: ServiceUnavailable when unreachable, ServiceError on a non-2xx
// answer or unparseable body.
ExtractorResult fetch_external_metadata(std::string_view pdf_bytes, const std::string& endpoint,
                                        int timeout_seconds = 30);
ExtractorResult parse_tei_header(std::string_view xml);

// Value of CITEASSIST_EXTRACTOR_URL, absent when unset or empty.
std::optional<std::string> extractor_url_from_env();

// Basename without its final extension, whitespace-normalized.
std::string filename_stem(std::string_view filename);

CalendarDate today_utc();

// Per-field precedence: user, external extractor, first-page heuristic,
// PDF info, fallback. Pages always come from page_count.
PreprintMetadata merge_metadata(const MetadataOverrides& user, const ExtractorResult& external,
                                const ExtractorResult& heuristic, const pdf::InfoDictionary& info,
                                std::string_view filename, int page_count, CalendarDate today);

struct PipelineOptions {
  MetadataOverrides overrides;
  // Extractor base URL; the external step is skipped when absent.
  std::optional<std::string> extractor_url;
  int extractor_timeout_seconds = 30;
  CalendarDate today = today_utc();
  const keywords::Lexicon* lexicon = nullptr;  // builtin tables when null
};

struct PipelineResult {
  PreprintMetadata metadata;
  ExtractorResult external;
  ExtractorResult heuristic;
  pdf::InfoDictionary info;
  // Set when the extractor was configured but could not be used.
  std::optional<std::string> extractor_error;
};

// Full extraction for one document: heuristics, info dictionary, optional
// extractor, overrides, then keywords. User keywords replace everything
// else; otherwise extractor keywords come first, followed by the top
// keywords of the full text.
PipelineResult extract_metadata(const pdf::PdfDocument& doc, std::string_view filename,
                                const PipelineOptions& options = {});

}  // namespace citeassist::extraction
