#include "citeassist/extraction.hpp"

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <sstream>

#include "citeassist/bibtex.hpp"
#include "citeassist/error.hpp"
#include "citeassist/text_util.hpp"
#include "http_client.hpp"

namespace citeassist::extraction {

namespace {

constexpr double k_size_tolerance = 0.5;

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

struct Line {
  std::vector<const pdf::TextRun*> runs;
  double y = 0;
  double size = 0;  // largest run on the line
};

std::vector<Line> group_lines(const std::vector<const pdf::TextRun*>& runs) {
  std::vector<Line> lines;
  for (const auto* r : runs) {
    if (!lines.empty() && std::abs(r->y - lines.back().y) <= 0.3 * std::max(r->font_size, lines.back().size)) {
      lines.back().runs.push_back(r);
      lines.back().size = std::max(lines.back().size, r->font_size);
    } else {
      lines.push_back({{r}, r->y, r->font_size});
    }
  }
  return lines;
}

std::size_t codepoints(std::string_view s) { return text::decode_utf8(s).size(); }

const std::vector<std::string_view>& particles() {
  static const std::vector<std::string_view> p = {"van", "von", "der", "den", "de",  "del", "della", "di", "da",
                                                  "du",  "la",  "le",  "dos", "das", "ten", "ter",   "bin", "al"};
  return p;
}

const std::vector<std::string_view>& affiliation_words() {
  static const std::vector<std::string_view> w = {"university", "universitat", "universite", "institute", "institut",
                                                  "department", "laboratory",  "laboratories", "school", "college",
                                                  "center",     "centre",      "faculty", "inc", "ltd", "gmbh",
                                                  "abstract",   "introduction", "corresponding", "email", "equal"};
  return w;
}

bool looks_like_affiliation(std::string_view line) {
  if (line.find('@') != std::string_view::npos) return true;
  const std::string folded = text::to_lower_ascii(text::fold_to_ascii(line));
  std::string word;
  for (char c : folded + " ") {
    if (c >= 'a' && c <= 'z') {
      word += c;
      continue;
    }
    if (!word.empty() && std::find(affiliation_words().begin(), affiliation_words().end(), word) != affiliation_words().end()) {
      return true;
    }
    word.clear();
  }
  return false;
}

// Drops footnote markers such as "1", "*", "†" or "1,2" glued to a name.
std::string strip_markers(std::string s) {
  static const std::vector<std::string> marks = {"*", "\xE2\x80\xA0", "\xE2\x80\xA1", "\xC2\xA7", "\xC2\xB9",
                                                 "\xC2\xB2", "\xC2\xB3"};
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    while (!s.empty() && (std::isdigit(static_cast<unsigned char>(s.back())) || s.back() == ' ')) {
      s.pop_back();
      changed = true;
    }
    for (const auto& m : marks) {
      if (s.size() >= m.size() && s.compare(s.size() - m.size(), m.size(), m) == 0) {
        s.resize(s.size() - m.size());
        changed = true;
      }
    }
  }
  return text::normalize_whitespace(s);
}

bool plausible_name(std::string_view candidate) {
  const auto tokens = text::split(text::normalize_whitespace(candidate), ' ');
  if (tokens.size() < 2 || tokens.size() > 5) return false;
  std::size_t capitalized = 0;
  for (const auto& t : tokens) {
    if (t.empty()) return false;
    if (std::find(particles().begin(), particles().end(), t) != particles().end()) continue;
    const std::string ascii = text::fold_to_ascii(t);
    if (ascii.empty() || ascii[0] < 'A' || ascii[0] > 'Z') return false;
    for (char c : ascii) {
      if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '\'')) return false;
    }
    ++capitalized;
  }
  return capitalized >= 2;
}

std::vector<std::string> split_name_list(std::string_view line) {
  std::string s(line);
  for (const std::string sep : {" and ", " & ", ";"}) {
    for (auto pos = s.find(sep); pos != std::string::npos; pos = s.find(sep, pos + 1)) s.replace(pos, sep.size(), ",");
  }
  std::vector<std::string> out;
  for (auto& piece : text::split(s, ',')) {
    std::string p = text::normalize_whitespace(piece);
    if (text::starts_with_ci(p, "and ")) p = p.substr(4);
    p = strip_markers(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

std::optional<CalendarDate> parse_iso_date(std::string_view s) {
  s = s.substr(0, s.find('T'));
  int parts[3] = {0, 1, 1};
  std::size_t index = 0;
  std::string cur;
  for (char c : std::string(s) + "-") {
    if (c == '-') {
      if (cur.empty() || index >= 3) break;
      parts[index++] = std::atoi(cur.c_str());
      cur.clear();
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      cur += c;
    } else {
      return std::nullopt;
    }
  }
  if (index == 0 || parts[0] <= 0 || parts[0] > 9999) return std::nullopt;
  CalendarDate d{parts[0], 1, 1};
  if (index >= 2 && parts[1] >= 1 && parts[1] <= 12) d.month = parts[1];
  return d;
}

namespace pt = boost::property_tree;

std::string local_name(const std::string& name) {
  const auto colon = name.find(':');
  return colon == std::string::npos ? name : name.substr(colon + 1);
}

const pt::ptree* child(const pt::ptree* node, std::string_view name) {
  if (!node) return nullptr;
  for (const auto& [n, c] : *node) {
    if (local_name(n) == name) return &c;
  }
  return nullptr;
}

const pt::ptree* path(const pt::ptree* node, std::initializer_list<std::string_view> names) {
  for (auto n : names) node = child(node, n);
  return node;
}

std::vector<const pt::ptree*> children(const pt::ptree* node, std::string_view name) {
  std::vector<const pt::ptree*> out;
  if (!node) return out;
  for (const auto& [n, c] : *node) {
    if (local_name(n) == name) out.push_back(&c);
  }
  return out;
}

std::string attribute(const pt::ptree* node, const std::string& name) {
  return node ? node->get("<xmlattr>." + name, "") : "";
}

// Character data of an element and its descendants, attributes excluded.
std::string all_text(const pt::ptree& node) {
  std::string out = node.data();
  for (const auto& [n, c] : node) {
    if (n == "<xmlattr>" || n == "<xmlcomment>") continue;
    out += " " + all_text(c);
  }
  return text::normalize_whitespace(out);
}

std::string person_name(const pt::ptree* pers) {
  std::string name;
  for (const auto* f : children(pers, "forename")) name += all_text(*f) + " ";
  for (const auto* s : children(pers, "surname")) name += all_text(*s) + " ";
  return text::normalize_whitespace(name);
}

std::optional<std::string> first_present(std::initializer_list<std::optional<std::string>> values) {
  for (const auto& v : values) {
    if (v && !blank(*v)) return v;
  }
  return std::nullopt;
}

std::vector<std::string> info_authors(const std::string& field) {
  std::vector<std::string> out;
  for (const auto& chunk : text::split(field, ';')) {
    for (auto& name : bibtex::split_authors(chunk)) {
      if (!blank(name)) out.push_back(text::normalize_whitespace(name));
    }
  }
  return out;
}

}  // namespace

ExtractorResult extract_first_page_metadata(const pdf::PageContent& page, std::string_view) {
  ExtractorResult result;
  std::vector<const pdf::TextRun*> top;
  for (const auto& r : page.text_runs) {
    if (!blank(r.text) && r.font_size > 0 && (page.height <= 0 || r.y <= page.height / 2)) top.push_back(&r);
  }
  if (top.empty()) return result;
  double max_size = 0;
  for (const auto* r : top) max_size = std::max(max_size, r->font_size);

  // Consecutive max-size runs form a group; another size or a wide vertical
  // gap closes it.
  struct Group {
    std::string text;
    std::size_t last_index = 0;  // into page.text_runs
    double last_y = 0;
  };
  std::vector<Group> groups;
  bool open = false;
  for (const auto* r : top) {
    const bool big = std::abs(r->font_size - max_size) <= k_size_tolerance;
    if (!big) {
      open = false;
      continue;
    }
    if (open && r->y - groups.back().last_y > 1.5 * max_size) open = false;
    if (!open) {
      groups.push_back({});
      open = true;
    }
    Group& g = groups.back();
    g.text += (g.text.empty() ? "" : " ") + r->text;
    g.last_index = static_cast<std::size_t>(r - page.text_runs.data());
    g.last_y = r->y;
  }
  const Group* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& g : groups) {
    const std::size_t len = codepoints(text::normalize_whitespace(g.text));
    if (len > best_len) {
      best = &g;
      best_len = len;
    }
  }
  if (!best) return result;
  result.title = text::normalize_whitespace(best->text);

  std::vector<const pdf::TextRun*> below;
  for (std::size_t i = best->last_index + 1; i < page.text_runs.size(); ++i) {
    if (!blank(page.text_runs[i].text)) below.push_back(&page.text_runs[i]);
  }
  std::vector<std::string> authors;
  double prev_y = best->last_y;
  std::size_t examined = 0;
  for (const auto& line : group_lines(below)) {
    if (++examined > 6) break;
    if (line.size >= max_size - k_size_tolerance) break;
    if (!authors.empty() && line.y - prev_y > 4 * std::max(line.size, 1.0)) break;
    std::string joined;
    for (const auto* r : line.runs) joined += r->text + ", ";
    if (looks_like_affiliation(joined)) break;
    std::vector<std::string> names;
    std::size_t pieces = 0;
    for (const auto* r : line.runs) {
      for (const auto& piece : split_name_list(r->text)) {
        ++pieces;
        if (plausible_name(piece)) names.push_back(piece);
      }
    }
    prev_y = line.y;
    if (names.empty() || names.size() * 2 < pieces) {
      if (!authors.empty()) break;
      continue;
    }
    authors.insert(authors.end(), names.begin(), names.end());
  }
  if (!authors.empty()) result.authors = authors;
  return result;
}

ExtractorResult parse_tei_header(std::string_view xml) {
  ExtractorResult result;
  if (blank(xml)) return result;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::ServiceError, std::string("extractor returned invalid XML: ") + e.what());
  }
  const pt::ptree* tei = child(&tree, "TEI");
  if (!tei) throw Error(ErrorCode::ServiceError, "extractor response is not a TEI document");
  const pt::ptree* header = child(tei, "teiHeader");
  const pt::ptree* file_desc = child(header, "fileDesc");
  const pt::ptree* bibl = path(file_desc, {"sourceDesc", "biblStruct"});

  std::optional<std::string> title;
  for (const auto* t : children(child(file_desc, "titleStmt"), "title")) {
    const std::string s = all_text(*t);
    if (!s.empty() && (!title || attribute(t, "type") == "main")) title = s;
  }
  if (!title) {
    for (const auto* t : children(child(bibl, "analytic"), "title")) {
      const std::string s = all_text(*t);
      if (!s.empty()) {
        title = s;
        break;
      }
    }
  }
  result.title = title;

  std::vector<std::string> authors;
  for (const auto* a : children(child(bibl, "analytic"), "author")) {
    const std::string name = person_name(child(a, "persName"));
    if (!name.empty()) authors.push_back(name);
  }
  if (!authors.empty()) result.authors = authors;

  std::vector<const pt::ptree*> dates = children(child(file_desc, "publicationStmt"), "date");
  for (const auto* d : children(path(bibl, {"monogr", "imprint"}), "date")) dates.push_back(d);
  for (const auto* d : dates) {
    std::string when = attribute(d, "when");
    if (when.empty()) when = text::trim(d->data());
    if (auto parsed = parse_iso_date(when)) {
      result.date = parsed;
      break;
    }
  }

  std::vector<std::string> keywords;
  for (const auto* k : children(path(header, {"profileDesc", "textClass"}), "keywords")) {
    const auto terms = children(k, "term");
    if (!terms.empty()) {
      for (const auto* t : terms) {
        const std::string s = all_text(*t);
        if (!s.empty()) keywords.push_back(s);
      }
    } else {
      std::string s = all_text(*k);
      std::replace(s.begin(), s.end(), ';', ',');
      for (const auto& piece : text::split(s, ',')) {
        const std::string p = text::normalize_whitespace(piece);
        if (!p.empty()) keywords.push_back(p);
      }
    }
  }
  if (!keywords.empty()) result.keywords = keywords;
  return result;
}

ExtractorResult fetch_external_metadata(std::string_view pdf_bytes, const std::string& endpoint,
                                        int timeout_seconds) {
  std::string base = endpoint;
  while (!base.empty() && base.back() == '/') base.pop_back();
  const auto res = http::post_multipart(base + "/api/processHeaderDocument",
                                        {{"input", std::string(pdf_bytes), "document.pdf", "application/pdf"},
                                         {"consolidateHeader", "0", "", ""}},
                                        timeout_seconds, {{"Accept", "application/xml"}});
  if (res.status == 204) return {};
  if (res.status < 200 || res.status >= 300) {
    throw Error(ErrorCode::ServiceError, "extractor answered HTTP " + std::to_string(res.status));
  }
  return parse_tei_header(res.body);
}

std::optional<std::string> extractor_url_from_env() {
  const char* v = std::getenv("CITEASSIST_EXTRACTOR_URL");
  if (!v || blank(v)) return std::nullopt;
  return text::trim(v);
}

std::string filename_stem(std::string_view filename) {
  const auto slash = filename.find_last_of("/\\");
  std::string_view base = slash == std::string_view::npos ? filename : filename.substr(slash + 1);
  const auto dot = base.rfind('.');
  if (dot != std::string_view::npos && dot > 0) base = base.substr(0, dot);
  return text::normalize_whitespace(base);
}

CalendarDate today_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  return {tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday};
}

PreprintMetadata merge_metadata(const MetadataOverrides& user, const ExtractorResult& external,
                                const ExtractorResult& heuristic, const pdf::InfoDictionary& info,
                                std::string_view filename, int page_count, CalendarDate today) {
  PreprintMetadata m;
  auto& prov = m.provenance;

  if (user.entry_type && !blank(*user.entry_type)) {
    m.entry_type = text::trim(*user.entry_type);
    prov["entry_type"] = Provenance::UserOverride;
  } else {
    m.entry_type = "article";
    prov["entry_type"] = Provenance::Fallback;
  }

  if (auto t = first_present({user.title}); t) {
    m.title = text::normalize_whitespace(*t);
    prov["title"] = Provenance::UserOverride;
  } else if (auto t = first_present({external.title}); t) {
    m.title = text::normalize_whitespace(*t);
    prov["title"] = Provenance::ExternalExtractor;
  } else if (auto t = first_present({heuristic.title}); t) {
    m.title = text::normalize_whitespace(*t);
    prov["title"] = Provenance::FirstPageHeuristic;
  } else if (auto t = first_present({info.title}); t) {
    m.title = text::normalize_whitespace(*t);
    prov["title"] = Provenance::PdfInfo;
  } else {
    m.title = filename_stem(filename);
    if (m.title.empty()) m.title = "untitled";
    prov["title"] = Provenance::Fallback;
  }

  auto non_empty = [](const std::optional<std::vector<std::string>>& v) {
    if (!v) return false;
    return std::any_of(v->begin(), v->end(), [](const std::string& s) { return !blank(s); });
  };
  auto clean = [](const std::vector<std::string>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) {
      if (!blank(s)) out.push_back(text::normalize_whitespace(s));
    }
    return out;
  };
  if (non_empty(user.authors)) {
    m.authors = clean(*user.authors);
    prov["authors"] = Provenance::UserOverride;
  } else if (non_empty(external.authors)) {
    m.authors = clean(*external.authors);
    prov["authors"] = Provenance::ExternalExtractor;
  } else if (non_empty(heuristic.authors)) {
    m.authors = clean(*heuristic.authors);
    prov["authors"] = Provenance::FirstPageHeuristic;
  } else if (info.author && !info_authors(*info.author).empty()) {
    m.authors = info_authors(*info.author);
    prov["authors"] = Provenance::PdfInfo;
  }

  // Best non-user date; the user may override year, month or both.
  std::optional<CalendarDate> lower;
  Provenance lower_source = Provenance::Fallback;
  if (external.date) {
    lower = external.date;
    lower_source = Provenance::ExternalExtractor;
  } else if (heuristic.date) {
    lower = heuristic.date;
    lower_source = Provenance::FirstPageHeuristic;
  } else if (info.creation_date) {
    lower = info.creation_date;
    lower_source = Provenance::PdfInfo;
  } else {
    lower = today;
  }
  m.date = {lower->year, lower->month, 1};
  prov["date"] = lower_source;
  const bool user_year = user.year && *user.year >= 0 && *user.year <= 9999;
  const bool user_month = user.month && *user.month >= 1 && *user.month <= 12;
  if (user_year) m.date.year = *user.year;
  if (user_month) m.date.month = *user.month;
  if (user_year || user_month) prov["date"] = Provenance::UserOverride;
  if (m.date.month < 1 || m.date.month > 12) m.date.month = 1;

  m.pages = std::max(page_count, 1);
  prov["pages"] = Provenance::PdfInfo;

  if (user.venue && !blank(*user.venue)) {
    m.venue = text::normalize_whitespace(*user.venue);
    prov["venue"] = Provenance::UserOverride;
  }
  if (user.doi && !blank(*user.doi)) {
    m.doi = text::trim(*user.doi);
    prov["doi"] = Provenance::UserOverride;
  }

  if (user.keywords) {
    m.keywords = clean(*user.keywords);
    prov["keywords"] = Provenance::UserOverride;
  } else if (non_empty(external.keywords)) {
    m.keywords = clean(*external.keywords);
    prov["keywords"] = Provenance::ExternalExtractor;
  }

  for (const auto& [name, value] : user.extra_fields) {
    m.extra_fields[name] = value;
    prov[name] = Provenance::UserOverride;
  }
  return m;
}

PipelineResult extract_metadata(const pdf::PdfDocument& doc, std::string_view filename, const PipelineOptions& options) {
  const keywords::Lexicon& lexicon = options.lexicon ? *options.lexicon : keywords::Lexicon::builtin();
  PipelineResult out;
  out.info = doc.info();
  if (doc.page_count() > 0) out.heuristic = extract_first_page_metadata(doc.page(0), filename);
  if (options.extractor_url) {
    try {
      out.external = fetch_external_metadata(doc.bytes(), *options.extractor_url, options.extractor_timeout_seconds);
    } catch (const Error& e) {
      out.extractor_error = std::string(to_string(e.code())) + ": " + e.what();
    }
  }
  out.metadata = merge_metadata(options.overrides, out.external, out.heuristic, out.info, filename,
                                static_cast<int>(doc.page_count()), options.today);

  auto& m = out.metadata;
  if (m.provenance.contains("keywords") && m.provenance["keywords"] == Provenance::UserOverride) {
    m.keywords = keywords::normalize_user_keywords(m.keywords, lexicon);
  } else {
    std::string full_text;
    for (std::size_t i = 0; i < doc.page_count(); ++i) full_text += pdf::extract_page_text(doc, i) + "\n";
    const auto given = keywords::normalize_user_keywords(m.keywords, lexicon);
    m.keywords = keywords::merge_keyword_lists(given, keywords::extract_keywords(full_text, lexicon));
    if (given.empty() && !m.keywords.empty()) m.provenance["keywords"] = Provenance::FirstPageHeuristic;
    if (m.keywords.empty()) m.provenance.erase("keywords");
  }
  return out;
}

}  // namespace citeassist::extraction
