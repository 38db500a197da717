#include "citeassist/related.hpp"

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "citeassist/error.hpp"
#include "citeassist/text_util.hpp"
#include "http_client.hpp"

namespace citeassist::related {

std::vector<RankedMatch> find_related(const std::vector<std::string>& query, const std::vector<RelatedPaper>& store,
                                      const std::optional<std::string>& exclude_id, std::size_t limit) {
  const std::unordered_set<std::string> wanted(query.begin(), query.end());
  std::vector<RankedMatch> out;
  if (wanted.empty()) return out;
  for (const auto& paper : store) {
    if (exclude_id && paper.id == *exclude_id) continue;
    const std::unordered_set<std::string> have(paper.keywords.begin(), paper.keywords.end());
    const auto count = static_cast<std::size_t>(
        std::count_if(have.begin(), have.end(), [&](const std::string& k) { return wanted.contains(k); }));
    if (count > 0) out.push_back({paper, count});
  }
  std::sort(out.begin(), out.end(), [](const RankedMatch& a, const RankedMatch& b) {
    if (a.match_count != b.match_count) return a.match_count > b.match_count;
    const int ya = a.paper.year.value_or(-1);
    const int yb = b.paper.year.value_or(-1);
    if (ya != yb) return ya > yb;
    if (a.paper.title != b.paper.title) return a.paper.title < b.paper.title;
    return a.paper.id < b.paper.id;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

namespace {

const std::regex& doi_shape() {
  static const std::regex re(R"(10\.\d{4,9}/\S+)");
  return re;
}

std::string strip_prefix_ci(std::string s, std::initializer_list<std::string_view> prefixes) {
  for (auto p : prefixes) {
    if (text::starts_with_ci(s, p)) return text::trim(std::string_view(s).substr(p.size()));
  }
  return s;
}

// 404 and 410 mean the identifier is unknown; 5xx means the service is
// down; anything else non-2xx is an unexpected answer.
void check_status(const http::Response& res, std::string_view what) {
  if (res.status >= 200 && res.status < 300) return;
  const std::string msg = std::string(what) + ": HTTP " + std::to_string(res.status);
  if (res.status == 404 || res.status == 410) throw Error(ErrorCode::NotFound, msg);
  if (res.status >= 500) throw Error(ErrorCode::ServiceUnavailable, msg);
  throw Error(ErrorCode::ServiceError, msg);
}

std::optional<int> year_from_date_parts(const nlohmann::json& msg) {
  for (const char* key : {"published", "issued", "published-print", "published-online", "created"}) {
    auto it = msg.find(key);
    if (it == msg.end() || !it->is_object()) continue;
    auto parts = it->find("date-parts");
    if (parts == it->end() || !parts->is_array() || parts->empty()) continue;
    const auto& first = (*parts)[0];
    if (!first.is_array() || first.empty()) continue;
    if (first[0].is_number_integer()) return first[0].get<int>();
    if (first[0].is_string()) {
      try {
        return std::stoi(first[0].get<std::string>());
      } catch (const std::exception&) {
      }
    }
  }
  return std::nullopt;
}

std::string json_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_array() && !it->empty() && (*it)[0].is_string()) return (*it)[0].get<std::string>();
  return {};
}

}  // namespace

std::optional<std::string> normalize_doi(std::string_view input) {
  std::string s = text::trim(input);
  s = strip_prefix_ci(s, {"https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/",
                          "doi.org/", "doi:"});
  if (!std::regex_match(s, doi_shape())) return std::nullopt;
  return s;
}

std::optional<std::string> normalize_arxiv_id(std::string_view input) {
  static const std::regex modern(R"(\d{4}\.\d{4,5}(v\d+)?)");
  static const std::regex legacy(R"([a-z]+(-[a-z]+)*(\.[A-Z]{2})?/\d{7}(v\d+)?)");
  std::string s = text::trim(input);
  s = strip_prefix_ci(s, {"https://arxiv.org/abs/", "http://arxiv.org/abs/", "https://arxiv.org/pdf/",
                          "http://arxiv.org/pdf/", "arxiv:"});
  if (s.size() > 4 && s.ends_with(".pdf")) s.resize(s.size() - 4);
  if (std::regex_match(s, modern) || std::regex_match(s, legacy)) return s;
  return std::nullopt;
}

RelatedPaper paper_from_crossref(std::string_view json_body, std::string_view doi) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ServiceError, std::string("DOI service returned invalid JSON: ") + e.what());
  }
  const nlohmann::json& msg = doc.contains("message") && doc["message"].is_object() ? doc["message"] : doc;

  RelatedPaper p;
  p.doi = json_string(msg, "DOI");
  if (p.doi->empty()) p.doi = std::string(doi);
  p.id = "doi:" + text::to_lower_ascii(*p.doi);
  p.title = text::normalize_whitespace(json_string(msg, "title"));
  if (p.title.empty()) throw Error(ErrorCode::ServiceError, "DOI record has no title");

  std::vector<std::string> names;
  if (auto it = msg.find("author"); it != msg.end() && it->is_array()) {
    for (const auto& a : *it) {
      const std::string family = text::normalize_whitespace(json_string(a, "family"));
      const std::string given = text::normalize_whitespace(json_string(a, "given"));
      const std::string name = text::normalize_whitespace(json_string(a, "name"));
      if (!family.empty() && !given.empty()) names.push_back(family + ", " + given);
      else if (!family.empty()) names.push_back(family);
      else if (!name.empty()) names.push_back(name);
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) p.authors += (i ? " and " : "") + names[i];

  p.year = year_from_date_parts(msg);
  if (std::string url = json_string(msg, "URL"); !url.empty()) p.url = url;
  else p.url = "https://doi.org/" + *p.doi;
  return p;
}

RelatedPaper paper_from_arxiv_atom(std::string_view xml_body, std::string_view id) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml_body)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::ServiceError, std::string("arXiv service returned invalid XML: ") + e.what());
  }
  const auto feed = tree.get_child_optional("feed");
  if (!feed) throw Error(ErrorCode::ServiceError, "arXiv response is not an Atom feed");
  const pt::ptree* entry = nullptr;
  for (const auto& [name, child] : *feed) {
    if (name == "entry") {
      entry = &child;
      break;
    }
  }
  if (!entry) throw Error(ErrorCode::NotFound, "arXiv has no entry for " + std::string(id));
  const std::string entry_id = entry->get("id", "");
  const std::string title = text::normalize_whitespace(entry->get("title", ""));
  // The API reports unknown identifiers as an entry titled "Error".
  if (title.empty() || (title == "Error" && entry_id.find("/api/errors") != std::string::npos)) {
    throw Error(ErrorCode::NotFound, "arXiv has no entry for " + std::string(id));
  }

  RelatedPaper p;
  p.id = "arxiv:" + std::string(id);
  p.title = title;
  std::vector<std::string> names;
  std::optional<std::string> abs_url;
  for (const auto& [name, child] : *entry) {
    if (name == "author") {
      const std::string n = text::normalize_whitespace(child.get("name", ""));
      if (!n.empty()) names.push_back(n);
    } else if (name == "link") {
      const std::string rel = child.get("<xmlattr>.rel", "");
      const std::string type = child.get("<xmlattr>.type", "");
      if (rel == "alternate" || (rel.empty() && type == "text/html")) abs_url = child.get("<xmlattr>.href", "");
    } else if (name == "arxiv:doi") {
      const std::string d = text::trim(child.data());
      if (!d.empty()) p.doi = d;
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) p.authors += (i ? " and " : "") + names[i];
  const std::string published = entry->get("published", "");
  if (published.size() >= 4) {
    try {
      p.year = std::stoi(published.substr(0, 4));
    } catch (const std::exception&) {
    }
  }
  p.url = abs_url && !abs_url->empty() ? *abs_url : "https://arxiv.org/abs/" + std::string(id);
  return p;
}

RelatedPaper resolve_doi(std::string_view doi, const ResolverConfig& config) {
  const auto normalized = normalize_doi(doi);
  if (!normalized) throw Error(ErrorCode::MalformedDoi, "not a DOI: " + std::string(doi));
  const auto res = http::get(config.doi_base + http::percent_encode(*normalized, "/"), config.timeout_seconds,
                             {{"Accept", "application/json"}});
  check_status(res, "DOI lookup for " + *normalized);
  return paper_from_crossref(res.body, *normalized);
}

RelatedPaper resolve_arxiv(std::string_view id, const ResolverConfig& config) {
  const auto normalized = normalize_arxiv_id(id);
  if (!normalized) throw Error(ErrorCode::MalformedArxivId, "not an arXiv identifier: " + std::string(id));
  const std::string sep = config.arxiv_base.find('?') == std::string::npos ? "?" : "&";
  const auto res = http::get(config.arxiv_base + sep + "id_list=" + http::percent_encode(*normalized, "/") +
                                 "&max_results=1",
                             config.timeout_seconds, {{"Accept", "application/atom+xml"}});
  check_status(res, "arXiv lookup for " + *normalized);
  return paper_from_arxiv_atom(res.body, *normalized);
}

}  // namespace citeassist::related
