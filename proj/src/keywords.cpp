#include "citeassist/keywords.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "citeassist/error.hpp"
#include "citeassist/text_util.hpp"

namespace citeassist::keywords {

namespace {

#include "citeassist_data.inc"

std::vector<std::string> data_lines(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = text::trim(line);
    if (!line.empty()) out.push_back(text::to_lower_ascii(line));
  }
  return out;
}

std::unordered_map<std::string, std::string> parse_exceptions(std::string_view text) {
  std::unordered_map<std::string, std::string> table;
  for (const auto& line : data_lines(text)) {
    auto parts = text::split(text::normalize_whitespace(line), ' ');
    if (parts.size() != 2) {
      throw Error(ErrorCode::InvalidInput, "lemma exception line needs two words: '" + line + "'");
    }
    table.emplace(parts[0], parts[1]);
  }
  return table;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string read_data_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read keyword data file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Lemmatizer::Lemmatizer(std::unordered_map<std::string, std::string> exceptions,
                       std::unordered_set<std::string> e_restore)
    : exceptions_(std::move(exceptions)), e_restore_(std::move(e_restore)) {
  // Follow chains (a -> b, b -> c) so every value is final, then make every
  // value map to itself.
  for (auto& [form, lemma] : exceptions_) {
    std::size_t hops = 0;
    while (hops++ < exceptions_.size()) {
      auto it = exceptions_.find(lemma);
      if (it == exceptions_.end() || it->second == lemma) break;
      lemma = it->second;
    }
  }
  std::vector<std::string> values;
  for (const auto& [form, lemma] : exceptions_) values.push_back(lemma);
  for (auto& v : values) exceptions_.emplace(v, v);
}

std::string Lemmatizer::restore(std::string stem) const {
  const std::size_t n = stem.size();
  if (n >= 4 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) && stem[n - 1] != 's' && stem[n - 1] != 'z' &&
      stem[n - 1] != 'l') {
    stem.pop_back();
    return stem;
  }
  if (e_restore_.contains(stem + "e")) stem += 'e';
  return stem;
}

std::optional<std::string> Lemmatizer::apply_rule(const std::string& w) const {
  const std::size_t n = w.size();
  if (ends_with(w, "ies")) {
    return n > 4 ? w.substr(0, n - 3) + "y" : w.substr(0, n - 1);
  }
  if (ends_with(w, "sses")) return w.substr(0, n - 2);
  if (ends_with(w, "es")) {
    const std::string stem = w.substr(0, n - 2);
    const bool sibilant = ends_with(stem, "x") || ends_with(stem, "z") || ends_with(stem, "ch") ||
                          ends_with(stem, "sh") || ends_with(stem, "ss") || ends_with(stem, "us");
    if (sibilant && stem.size() >= 3 && !e_restore_.contains(stem + "e")) return stem;
  }
  if (ends_with(w, "s")) {
    const char prev = n >= 2 ? w[n - 2] : '\0';
    if (prev != 's' && prev != 'u' && prev != 'i' && n - 1 >= 3) return w.substr(0, n - 1);
    return std::nullopt;
  }
  if (ends_with(w, "ing")) {
    const std::string stem = w.substr(0, n - 3);
    if (stem.size() >= 3 && has_vowel(stem)) return restore(stem);
    return std::nullopt;
  }
  if (ends_with(w, "ed") && !ends_with(w, "eed")) {
    const std::string stem = w.substr(0, n - 2);
    if (stem.size() >= 3 && has_vowel(stem)) return restore(stem);
  }
  return std::nullopt;
}

std::string Lemmatizer::lemmatize(std::string_view token) const {
  const std::string w(token);
  if (auto it = exceptions_.find(w); it != exceptions_.end()) return it->second;
  auto out = apply_rule(w);
  if (!out) return w;
  if (auto it = exceptions_.find(*out); it != exceptions_.end()) return it->second;
  auto again = apply_rule(*out);
  if (!again || *again == *out) return *out;
  return w;
}

Lexicon::Lexicon(std::unordered_set<std::string> stopwords, Lemmatizer lemmatizer)
    : stopwords_(std::move(stopwords)), lemmatizer_(std::move(lemmatizer)) {}

Lexicon Lexicon::from_text(std::string_view stopwords, std::string_view exceptions, std::string_view e_restore) {
  std::unordered_set<std::string> stops;
  for (auto& w : data_lines(stopwords)) stops.insert(std::move(w));
  std::unordered_set<std::string> e_table;
  for (auto& w : data_lines(e_restore)) e_table.insert(std::move(w));
  return Lexicon(std::move(stops), Lemmatizer(parse_exceptions(exceptions), std::move(e_table)));
}

Lexicon Lexicon::from_directory(const std::filesystem::path& dir) {
  return from_text(read_data_file(dir / "stopwords.txt"), read_data_file(dir / "lemma_exceptions.txt"),
                   read_data_file(dir / "e_restore.txt"));
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lexicon = from_text(k_stopwords_txt, k_lemma_exceptions_txt, k_e_restore_txt);
  return lexicon;
}

std::vector<std::string> tokenize(std::string_view input) {
  const std::string folded = text::to_lower_ascii(text::fold_to_ascii(input));
  std::vector<std::string> out;
  std::string cur;
  bool digit = false;
  auto flush = [&] {
    if (!cur.empty() && !digit) out.push_back(cur);
    cur.clear();
    digit = false;
  };
  for (char c : folded) {
    if (c >= 'a' && c <= 'z') {
      cur += c;
    } else if (c >= '0' && c <= '9') {
      cur += c;
      digit = true;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

namespace {

std::optional<std::string> keyword_for(const std::string& token, const Lexicon& lexicon) {
  if (token.size() < 2 || lexicon.is_stopword(token)) return std::nullopt;
  std::string lemma = lexicon.lemmatizer().lemmatize(token);
  if (lemma.size() < 2 || lexicon.is_stopword(lemma)) return std::nullopt;
  return lemma;
}

}  // namespace

std::vector<std::string> extract_keywords(std::string_view full_text, const Lexicon& lexicon, std::size_t limit) {
  struct Tally {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Tally> tallies;
  std::vector<std::string> order;
  std::size_t position = 0;
  for (const auto& token : tokenize(full_text)) {
    ++position;
    auto lemma = keyword_for(token, lexicon);
    if (!lemma) continue;
    auto [it, inserted] = tallies.try_emplace(*lemma, Tally{0, position});
    if (inserted) order.push_back(*lemma);
    ++it->second.count;
  }
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const Tally& ta = tallies[a];
    const Tally& tb = tallies[b];
    if (ta.count != tb.count) return ta.count > tb.count;
    return ta.first < tb.first;
  });
  if (order.size() > limit) order.resize(limit);
  return order;
}

std::vector<std::string> normalize_user_keywords(const std::vector<std::string>& raw, const Lexicon& lexicon) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& entry : raw) {
    for (const auto& token : tokenize(entry)) {
      auto lemma = keyword_for(token, lexicon);
      if (lemma && seen.insert(*lemma).second) out.push_back(*lemma);
    }
  }
  return out;
}

std::vector<std::string> merge_keyword_lists(const std::vector<std::string>& first,
                                             const std::vector<std::string>& second) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto* list : {&first, &second}) {
    for (const auto& k : *list) {
      if (seen.insert(k).second) out.push_back(k);
    }
  }
  return out;
}

int data_file_version(std::string_view text) {
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] != '#') break;
    auto pos = line.find("version:");
    if (pos != std::string::npos) return std::atoi(line.c_str() + pos + 8);
  }
  return 0;
}

}  // namespace citeassist::keywords
