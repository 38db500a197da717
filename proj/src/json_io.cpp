#include "citeassist/json_io.hpp"

#include "citeassist/error.hpp"

namespace citeassist::json_io {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidInput, "invalid JSON: " + what); }

const json* member(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) return std::nullopt;
  if (!v->is_string()) bad(std::string(key) + " must be a string");
  return v->get<std::string>();
}

std::optional<int> opt_int(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) return std::nullopt;
  if (v->is_number_integer()) return v->get<int>();
  if (v->is_string()) {
    const std::string s = v->get<std::string>();
    try {
      std::size_t used = 0;
      const int n = std::stoi(s, &used);
      if (used == s.size()) return n;
    } catch (const std::exception&) {
    }
  }
  bad(std::string(key) + " must be an integer");
}

std::optional<std::vector<std::string>> opt_strings(const json& j, const char* key) {
  const json* v = member(j, key);
  if (!v) return std::nullopt;
  if (!v->is_array()) bad(std::string(key) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : *v) {
    if (!e.is_string()) bad(std::string(key) + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::map<std::string, std::string> string_map(const json& j, const char* key) {
  std::map<std::string, std::string> out;
  const json* v = member(j, key);
  if (!v) return out;
  if (!v->is_object()) bad(std::string(key) + " must be an object");
  for (const auto& [k, val] : v->items()) {
    if (val.is_string()) out[k] = val.get<std::string>();
    else if (val.is_number()) out[k] = val.dump();
    else bad(std::string(key) + "." + k + " must be a string");
  }
  return out;
}

json nullable(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

json to_json(const PreprintMetadata& m) {
  json prov = json::object();
  for (const auto& [field, p] : m.provenance) prov[field] = std::string(to_string(p));
  return {{"entry_type", m.entry_type},
          {"title", m.title},
          {"authors", m.authors},
          {"year", m.date.year},
          {"month", m.date.month},
          {"pages", m.pages},
          {"venue", nullable(m.venue)},
          {"doi", nullable(m.doi)},
          {"keywords", m.keywords},
          {"extra_fields", m.extra_fields},
          {"provenance", prov}};
}

PreprintMetadata metadata_from_json(const json& j) {
  if (!j.is_object()) bad("metadata must be an object");
  PreprintMetadata m;
  if (auto v = opt_string(j, "entry_type")) m.entry_type = *v;
  auto title = opt_string(j, "title");
  if (!title || title->empty()) bad("metadata needs a title");
  m.title = *title;
  if (auto v = opt_strings(j, "authors")) m.authors = *v;
  if (auto v = opt_int(j, "year")) m.date.year = *v;
  if (auto v = opt_int(j, "month")) m.date.month = *v;
  if (m.date.month < 1 || m.date.month > 12) bad("month must be 1..12");
  if (auto v = opt_int(j, "pages")) m.pages = *v;
  m.venue = opt_string(j, "venue");
  m.doi = opt_string(j, "doi");
  if (auto v = opt_strings(j, "keywords")) m.keywords = *v;
  m.extra_fields = string_map(j, "extra_fields");
  for (const auto& [field, name] : string_map(j, "provenance")) {
    auto p = provenance_from_string(name);
    if (!p) bad("unknown provenance " + name);
    m.provenance[field] = *p;
  }
  return m;
}

json to_json(const MetadataOverrides& o) {
  json j = json::object();
  if (o.entry_type) j["entry_type"] = *o.entry_type;
  if (o.title) j["title"] = *o.title;
  if (o.authors) j["authors"] = *o.authors;
  if (o.year) j["year"] = *o.year;
  if (o.month) j["month"] = *o.month;
  if (o.pages) j["pages"] = *o.pages;
  if (o.venue) j["venue"] = *o.venue;
  if (o.doi) j["doi"] = *o.doi;
  if (o.keywords) j["keywords"] = *o.keywords;
  if (!o.extra_fields.empty()) j["extra_fields"] = o.extra_fields;
  return j;
}

MetadataOverrides overrides_from_json(const json& j) {
  if (!j.is_object()) bad("overrides must be an object");
  MetadataOverrides o;
  o.entry_type = opt_string(j, "entry_type");
  o.title = opt_string(j, "title");
  o.authors = opt_strings(j, "authors");
  o.year = opt_int(j, "year");
  o.month = opt_int(j, "month");
  o.pages = opt_int(j, "pages");
  o.venue = opt_string(j, "venue");
  o.doi = opt_string(j, "doi");
  o.keywords = opt_strings(j, "keywords");
  o.extra_fields = string_map(j, "extra_fields");
  return o;
}

json to_json(const related::RelatedPaper& p) {
  return {{"id", p.id},
          {"title", p.title},
          {"authors", p.authors},
          {"doi", nullable(p.doi)},
          {"url", nullable(p.url)},
          {"year", p.year ? json(*p.year) : json(nullptr)},
          {"keywords", p.keywords}};
}

related::RelatedPaper paper_from_json(const json& j) {
  if (!j.is_object()) bad("related paper must be an object");
  related::RelatedPaper p;
  p.id = opt_string(j, "id").value_or("");
  p.title = opt_string(j, "title").value_or("");
  if (p.title.empty()) bad("related paper needs a title");
  p.authors = opt_string(j, "authors").value_or("");
  p.doi = opt_string(j, "doi");
  p.url = opt_string(j, "url");
  p.year = opt_int(j, "year");
  p.keywords = opt_strings(j, "keywords").value_or(std::vector<std::string>{});
  return p;
}

json to_json(const related::RankedMatch& m) {
  json j = to_json(m.paper);
  j["match_count"] = m.match_count;
  return j;
}

json to_json(const bibtex::Entry& e) {
  json fields = json::object();
  for (const auto& [k, v] : e.fields) fields[k] = v;
  return {{"type", e.type}, {"key", e.key}, {"fields", fields}};
}

bibtex::Entry entry_from_json(const json& j) {
  if (!j.is_object()) bad("entry must be an object");
  bibtex::Entry e;
  if (auto t = opt_string(j, "type")) e.type = *t;
  e.key = opt_string(j, "key").value_or("");
  for (const auto& [k, v] : string_map(j, "fields")) e.fields[k] = v;
  return e;
}

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

}  // namespace citeassist::json_io
