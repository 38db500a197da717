#include "citeassist/bibtex.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "citeassist/error.hpp"
#include "citeassist/text_util.hpp"

namespace citeassist::bibtex {

namespace {

constexpr std::array<std::string_view, 8> k_canonical = {"author", "title", "journal", "volume",
                                                         "pages",  "year",  "month",   "doi"};

std::size_t rank(const std::string& name) {
  auto it = std::find(k_canonical.begin(), k_canonical.end(), name);
  return static_cast<std::size_t>(it - k_canonical.begin());
}

std::string pad(int value, int width) {
  std::string s = std::to_string(value < 0 ? 0 : value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

std::string escape_value(std::string_view v) {
  std::string out;
  out.reserve(v.size());
  for (char c : v) {
    if (c == '\\' || c == '{' || c == '}') out += '\\';
    out += c;
  }
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool valid_field_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return !is_space(c) && c != '=' && c != ',' && c != '{' && c != '}' && c != '"' && c != '(' && c != ')';
  });
}

class Reader {
 public:
  explicit Reader(std::string_view text) : s_(text) {}

  std::optional<Entry> next_entry() {
    while (true) {
      const std::size_t at = s_.find('@', pos_);
      if (at == std::string_view::npos) return std::nullopt;
      pos_ = at + 1;
      std::size_t p = pos_;
      while (p < s_.size() && std::isalpha(static_cast<unsigned char>(s_[p]))) ++p;
      if (p == pos_) continue;
      std::string type = text::to_lower_ascii(s_.substr(pos_, p - pos_));
      while (p < s_.size() && is_space(s_[p])) ++p;
      if (p >= s_.size() || (s_[p] != '{' && s_[p] != '(')) continue;
      const char open = s_[p];
      const char close = open == '{' ? '}' : ')';
      const std::size_t open_pos = p;
      pos_ = p + 1;
      if (type == "comment" || type == "string" || type == "preamble") {
        skip_balanced(open_pos, open, close);
        continue;
      }
      Entry e;
      e.type = std::move(type);
      read_body(e, open_pos, close);
      return e;
    }
  }

 private:
  [[noreturn]] void unbalanced(std::size_t position, const std::string& what) {
    throw SyntaxError("unbalanced delimiters: " + what + " opened at offset " + std::to_string(position), position);
  }

  void skip_ws() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  void skip_balanced(std::size_t open_pos, char open, char close) {
    int depth = 1;
    while (pos_ < s_.size()) {
      const char c = s_[pos_++];
      if (c == '\\' && pos_ < s_.size()) {
        ++pos_;
      } else if (c == open) {
        ++depth;
      } else if (c == close && --depth == 0) {
        return;
      }
    }
    unbalanced(open_pos, std::string(1, open));
  }

  void read_body(Entry& e, std::size_t open_pos, char close) {
    skip_ws();
    // key: everything up to the first ',' unless it is really a field
    std::size_t p = pos_;
    while (p < s_.size() && s_[p] != ',' && s_[p] != close && s_[p] != '=') ++p;
    if (p >= s_.size()) unbalanced(open_pos, "entry");
    if (s_[p] != '=') {
      e.key = std::string(text::trim(s_.substr(pos_, p - pos_)));
      pos_ = p;
    }
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) unbalanced(open_pos, "entry");
      const char c = s_[pos_];
      if (c == ',') {
        ++pos_;
        continue;
      }
      if (c == close) {
        ++pos_;
        return;
      }
      std::size_t name_start = pos_;
      while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '=' && s_[pos_] != ',' && s_[pos_] != close &&
             s_[pos_] != '{' && s_[pos_] != '"') {
        ++pos_;
      }
      std::string name = text::to_lower_ascii(s_.substr(name_start, pos_ - name_start));
      skip_ws();
      if (pos_ >= s_.size()) unbalanced(open_pos, "entry");
      if (s_[pos_] != '=') {
        // stray token: drop it and resynchronise on the next separator
        if (name.empty()) ++pos_;
        continue;
      }
      ++pos_;
      std::string value = read_value(open_pos, close);
      if (!name.empty() && !e.fields.contains(name)) e.fields.emplace(std::move(name), std::move(value));
    }
  }

  std::string read_value(std::size_t entry_pos, char close) {
    std::string value;
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) unbalanced(entry_pos, "entry");
      const char c = s_[pos_];
      if (c == '{') {
        value += read_delimited(pos_, '}');
      } else if (c == '"') {
        value += read_delimited(pos_, '"');
      } else {
        std::size_t start = pos_;
        while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != ',' && s_[pos_] != close && s_[pos_] != '#') {
          ++pos_;
        }
        value += s_.substr(start, pos_ - start);
      }
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == '#') {
        ++pos_;
        continue;
      }
      return value;
    }
  }

  // Reads a {...} or "..." group starting at start; \\ \{ \} are unescaped,
  // other backslash sequences are kept as written.
  std::string read_delimited(std::size_t start, char terminator) {
    pos_ = start + 1;
    std::string out;
    int depth = 0;
    while (pos_ < s_.size()) {
      const char c = s_[pos_++];
      if (c == '\\' && pos_ < s_.size()) {
        const char n = s_[pos_];
        if (n == '\\' || n == '{' || n == '}') {
          out += n;
          ++pos_;
        } else {
          out += c;
        }
        continue;
      }
      if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (depth == 0) {
          if (terminator == '}') return out;
          throw SyntaxError("unbalanced delimiters: unexpected '}' at offset " + std::to_string(pos_ - 1), pos_ - 1);
        }
        --depth;
      } else if (c == '"' && terminator == '"' && depth == 0) {
        return out;
      }
      out += c;
    }
    unbalanced(start, std::string(1, s_[start]));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<int> leading_int(std::string_view raw) {
  const std::string s = text::trim(raw);
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<int> parse_month(std::string_view raw) {
  const std::string s = text::trim(raw);
  if (auto n = leading_int(s); n && *n >= 1 && *n <= 12) return n;
  static constexpr std::array<std::string_view, 12> names = {"jan", "feb", "mar", "apr", "may", "jun",
                                                             "jul", "aug", "sep", "oct", "nov", "dec"};
  const std::string lower = text::to_lower_ascii(s);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (lower.size() >= 3 && lower.compare(0, 3, names[i]) == 0) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

std::optional<int> parse_year(std::string_view s) {
  for (std::size_t i = 0; i + 4 <= s.size(); ++i) {
    if (std::all_of(s.begin() + i, s.begin() + i + 4, [](char c) { return c >= '0' && c <= '9'; }) &&
        (i + 4 == s.size() || !std::isdigit(static_cast<unsigned char>(s[i + 4]))) &&
        (i == 0 || !std::isdigit(static_cast<unsigned char>(s[i - 1])))) {
      return std::stoi(std::string(s.substr(i, 4)));
    }
  }
  return std::nullopt;
}

std::size_t token_count(std::string_view s) { return text::split(text::normalize_whitespace(s), ' ').size(); }

}  // namespace

bool FieldOrder::operator()(const std::string& a, const std::string& b) const {
  const auto ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb;
  return a < b;
}

bool is_valid_key(std::string_view key) {
  static constexpr std::string_view forbidden = ",{}()=\\#%~\"";
  return !key.empty() && std::none_of(key.begin(), key.end(), [](char c) {
    return is_space(c) || forbidden.find(c) != std::string_view::npos;
  });
}

std::string generate_key(const PreprintMetadata& meta) {
  std::string family;
  if (!meta.authors.empty()) {
    std::string name = text::trim(meta.authors.front());
    if (auto comma = name.find(','); comma != std::string::npos) name = text::trim(name.substr(0, comma));
    auto tokens = text::split(text::normalize_whitespace(name), ' ');
    if (!tokens.empty()) {
      for (char c : text::to_lower_ascii(text::fold_to_ascii(tokens.back()))) {
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) family += c;
      }
    }
    while (!family.empty() && !(family[0] >= 'a' && family[0] <= 'z')) family.erase(0, 1);
  }
  if (family.empty()) family = "anonymous";
  return family + pad(std::clamp(meta.date.year, 0, 9999), 4);
}

Entry build_entry(const PreprintMetadata& meta, bool include_keywords) {
  Entry e;
  e.type = text::to_lower_ascii(meta.entry_type.empty() ? "article" : meta.entry_type);
  e.key = generate_key(meta);
  if (!meta.authors.empty()) {
    std::string joined;
    for (const auto& a : meta.authors) {
      if (!joined.empty()) joined += ", ";
      joined += a;
    }
    e.fields["author"] = joined;
  }
  e.fields["title"] = meta.title;
  if (meta.venue) {
    const bool in_book = e.type == "inproceedings" || e.type == "incollection" || e.type == "inbook";
    e.fields[in_book ? "booktitle" : "journal"] = *meta.venue;
  }
  e.fields["pages"] = std::to_string(meta.pages);
  e.fields["year"] = pad(meta.date.year, 4);
  e.fields["month"] = pad(meta.date.month, 2);
  if (meta.doi) e.fields["doi"] = *meta.doi;
  if (include_keywords && !meta.keywords.empty()) {
    std::string joined;
    for (const auto& k : meta.keywords) {
      if (!joined.empty()) joined += ", ";
      joined += k;
    }
    e.fields["keywords"] = joined;
  }
  for (const auto& [name, value] : meta.extra_fields) {
    std::string lower = text::to_lower_ascii(name);
    if (valid_field_name(lower) && !e.fields.contains(lower)) e.fields.emplace(std::move(lower), value);
  }
  return e;
}

std::vector<std::string> serialize_blocks(const Entry& entry) {
  std::vector<std::string> out{"@" + entry.type + "{" + entry.key + ","};
  for (const auto& [name, value] : entry.fields) out.push_back(" " + name + "={" + escape_value(value) + "},");
  if (out.size() > 1) out.back().pop_back();
  out.push_back("}");
  return out;
}

std::string serialize(const Entry& entry) {
  std::string out;
  for (const auto& block : serialize_blocks(entry)) out += (out.empty() ? "" : "\n") + block;
  return out;
}

Entry parse(std::string_view text) {
  Reader reader(text);
  if (auto e = reader.next_entry()) return std::move(*e);
  throw Error(ErrorCode::NoEntryFound, "no BibTeX entry found");
}

std::vector<std::string> split_authors(std::string_view field) {
  const std::string norm = text::normalize_whitespace(field);
  std::vector<std::string> out;
  auto push = [&out](std::string_view s) {
    auto t = text::trim(s);
    if (!t.empty()) out.emplace_back(t);
  };
  std::vector<std::string> by_and;
  std::size_t start = 0;
  while (true) {
    auto at = norm.find(" and ", start);
    by_and.push_back(norm.substr(start, at == std::string::npos ? std::string::npos : at - start));
    if (at == std::string::npos) break;
    start = at + 5;
  }
  if (by_and.size() > 1) {
    for (const auto& a : by_and) push(a);
    return out;
  }
  auto pieces = text::split(norm, ',');
  if (pieces.size() == 2 && token_count(pieces[0]) == 1 && token_count(pieces[1]) == 1) {
    push(norm);
    return out;
  }
  for (const auto& p : pieces) push(p);
  return out;
}

MetadataOverrides entry_to_metadata(const Entry& entry) {
  MetadataOverrides o;
  auto get = [&](const char* name) -> const std::string* {
    auto it = entry.fields.find(name);
    return it == entry.fields.end() ? nullptr : &it->second;
  };
  if (entry.type != "article" && !entry.type.empty()) o.entry_type = entry.type;
  if (const auto* v = get("author")) {
    auto names = split_authors(*v);
    if (!names.empty()) o.authors = names;
  }
  if (const auto* v = get("title")) {
    auto t = text::normalize_whitespace(*v);
    if (!t.empty()) o.title = t;
  }
  if (const auto* v = get("year")) o.year = parse_year(*v);
  if (const auto* v = get("month")) o.month = parse_month(*v);
  if (const auto* v = get("pages")) {
    if (auto n = leading_int(*v); n && *n > 0) o.pages = n;
  }
  if (const auto* v = get("doi")) {
    auto t = text::normalize_whitespace(*v);
    if (!t.empty()) o.doi = t;
  }
  for (const char* venue : {"journal", "booktitle"}) {
    if (const auto* v = get(venue); v && !o.venue) {
      auto t = text::normalize_whitespace(*v);
      if (!t.empty()) o.venue = t;
    }
  }
  if (const auto* v = get("keywords")) {
    std::vector<std::string> kws;
    std::string cur;
    for (char c : *v + ",") {
      if (c == ',' || c == ';') {
        auto t = text::normalize_whitespace(cur);
        if (!t.empty()) kws.push_back(t);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!kws.empty()) o.keywords = kws;
  }
  static constexpr std::array<std::string_view, 9> mapped = {"author", "title",   "year",      "month",   "pages",
                                                             "doi",    "journal", "booktitle", "keywords"};
  for (const auto& [name, value] : entry.fields) {
    if (std::find(mapped.begin(), mapped.end(), name) == mapped.end()) o.extra_fields[name] = value;
  }
  return o;
}

}  // namespace citeassist::bibtex
