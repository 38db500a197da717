#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "citeassist/metadata.hpp"

namespace citeassist::bibtex {

// author, title, journal, volume, pages, year, month, doi, then the rest
// alphabetically.
struct FieldOrder {
  bool operator()(const std::string& a, const std::string& b) const;
};

using FieldMap = std::map<std::string, std::string, FieldOrder>;

struct Entry {
  std::string type = "article";  // lowercase
  std::string key;
  FieldMap fields;  // lowercase names -> unescaped values

  bool operator==(const Entry&) const = default;
};

// Non-empty and free of whitespace and ",{}()=\#%~" and '"'.
bool is_valid_key(std::string_view key);

// Fields: author (names joined with ", "), title, journal (venue), pages,
// year, month (two digits), doi, user extra fields, and keywords when
// include_keywords is set.
Entry build_entry(const PreprintMetadata& meta, bool include_keywords = false);

// lowercase ASCII family name of the first author + four-digit year;
// "anonymous" when there is no usable author name.
std::string generate_key(const PreprintMetadata& meta);

std::string serialize(const Entry& entry);
// The pieces of serialize(entry): header, one block per field, closing
// brace. Joined with '\n' they give serialize(entry). A block contains
// newlines only if its value does.
std::vector<std::string> serialize_blocks(const Entry& entry);

// Tolerant parser; returns the first entry in text and skips @comment,
// @string and @preamble blocks.
// Errors: NoEntryFound, UnbalancedDelimiters (as SyntaxError with position).
Entry parse(std::string_view text);

// "A and B" splits on " and "; otherwise on ", " (a lone "Family, Given" pair
// is kept together).
std::vector<std::string> split_authors(std::string_view field);

// Maps author, title, year, month, pages, doi and journal/booktitle into
// override slots. A non-default entry type and any other fields are carried
// in entry_type / extra_fields.
MetadataOverrides entry_to_metadata(const Entry& entry);

}  // namespace citeassist::bibtex
