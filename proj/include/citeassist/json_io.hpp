#pragma once

#include <json.hpp>

#include "citeassist/bibtex.hpp"
#include "citeassist/metadata.hpp"
#include "citeassist/related.hpp"

// JSON shapes shared by the CLI and the HTTP API. Metadata:
//   {"entry_type", "title", "authors": [..], "year", "month", "pages",
//    "venue", "doi", "keywords": [..], "extra_fields": {..},
//    "provenance": {"title": "user" | "extractor" | "heuristic" |
//                             "pdf_info" | "fallback", ..}}
// Overrides use the same keys; absent or null keys are not overridden.
namespace citeassist::json_io {

using nlohmann::json;

json to_json(const PreprintMetadata& m);
// Errors: InvalidInput on wrong types or a missing title.
PreprintMetadata metadata_from_json(const json& j);

json to_json(const MetadataOverrides& o);
MetadataOverrides overrides_from_json(const json& j);

json to_json(const related::RelatedPaper& p);
related::RelatedPaper paper_from_json(const json& j);
json to_json(const related::RankedMatch& m);

json to_json(const bibtex::Entry& e);
bibtex::Entry entry_from_json(const json& j);

// Parses text, mapping syntax errors to InvalidInput.
json parse(std::string_view text);

}  // namespace citeassist::json_io
