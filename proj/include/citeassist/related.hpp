#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citeassist::related {

constexpr std::size_t k_max_related = 5;

struct RelatedPaper {
  std::string id;
  std::string title;
  std::string authors;
  std::optional<std::string> doi;
  std::optional<std::string> url;
  std::optional<int> year;
  std::vector<std::string> keywords;

  bool operator==(const RelatedPaper&) const = default;
};

struct RankedMatch {
  RelatedPaper paper;
  std::size_t match_count = 0;

  bool operator==(const RankedMatch&) const = default;
};

// Papers sharing at least one keyword with the query, by match count, then
// year (newest first, missing years last), then title, then id. Keywords
// are expected to be lemmatized already.
std::vector<RankedMatch> find_related(const std::vector<std::string>& query, const std::vector<RelatedPaper>& store,
                                      const std::optional<std::string>& exclude_id = std::nullopt,
                                      std::size_t limit = k_max_related);

struct ResolverConfig {
  std::string doi_base = "https://api.crossref.org/works/";
  std::string arxiv_base = "https://export.arxiv.org/api/query";
  int timeout_seconds = 15;
};

// Accepts bare DOIs as well as "doi:" and doi.org URL forms.
std::optional<std::string> normalize_doi(std::string_view input);
// Modern (2407.01234v2) and legacy (hep-th/9901001) identifiers, with an
// optional "arXiv:" prefix or abs/pdf URL around them.
std::optional<std::string> normalize_arxiv_id(std::string_view input);

RelatedPaper resolve_doi(std::string_view doi, const ResolverConfig& config = {});
RelatedPaper resolve_arxiv(std::string_view id, const ResolverConfig& config = {});

// Response mapping, exposed for tests.
RelatedPaper paper_from_crossref(std::string_view json_body, std::string_view doi);
RelatedPaper paper_from_arxiv_atom(std::string_view xml_body, std::string_view id);

}  // namespace citeassist::related
