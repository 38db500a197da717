#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace citeassist::keywords {

constexpr std::size_t k_max_keywords = 5;

// Rule-based lemmatizer: exception table first, then the first matching
// suffix rule (-ies, -sses, -es, -s, -ing, -ed). A rule result is kept only
// if the lemmatizer maps it to itself, which makes lemmatize idempotent.
class Lemmatizer {
 public:
  Lemmatizer(std::unordered_map<std::string, std::string> exceptions, std::unordered_set<std::string> e_restore);

  std::string lemmatize(std::string_view token) const;
  const std::unordered_map<std::string, std::string>& exceptions() const { return exceptions_; }

 private:
  std::optional<std::string> apply_rule(const std::string& w) const;
  std::string restore(std::string stem) const;

  std::unordered_map<std::string, std::string> exceptions_;
  std::unordered_set<std::string> e_restore_;
};

// Stopword list plus lemmatizer, loaded from the three data files.
class Lexicon {
 public:
  Lexicon(std::unordered_set<std::string> stopwords, Lemmatizer lemmatizer);

  // Files: stopwords.txt, lemma_exceptions.txt, e_restore.txt. Missing
  // files throw Error(InvalidInput).
  static Lexicon from_directory(const std::filesystem::path& dir);
  static Lexicon from_text(std::string_view stopwords, std::string_view exceptions, std::string_view e_restore);
  // The tables compiled into the library.
  static const Lexicon& builtin();

  bool is_stopword(std::string_view w) const { return stopwords_.contains(std::string(w)); }
  const std::unordered_set<std::string>& stopwords() const { return stopwords_; }
  const Lemmatizer& lemmatizer() const { return lemmatizer_; }

 private:
  std::unordered_set<std::string> stopwords_;
  Lemmatizer lemmatizer_;
};

// Diacritics folded to ASCII, lowercased, split into maximal [a-z0-9]
// runs; runs containing digits are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Tokenize, drop stopwords and tokens shorter than 2, lemmatize (dropping
// lemmas that are stopwords), count, and return the top five by count with
// ties broken by first occurrence.
std::vector<std::string> extract_keywords(std::string_view full_text, const Lexicon& lexicon = Lexicon::builtin(),
                                          std::size_t limit = k_max_keywords);

// Same pipeline without ranking; order preserved, duplicates collapsed.
std::vector<std::string> normalize_user_keywords(const std::vector<std::string>& raw,
                                                 const Lexicon& lexicon = Lexicon::builtin());

// Concatenation with duplicates removed, first occurrence kept.
std::vector<std::string> merge_keyword_lists(const std::vector<std::string>& first,
                                             const std::vector<std::string>& second);

// Reads "# version: N" from a data file header; 0 when absent.
int data_file_version(std::string_view text);

}  // namespace citeassist::keywords
