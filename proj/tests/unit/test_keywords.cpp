#include <algorithm>
#include <map>
#include <random>
#include <regex>

#include "citeassist/keywords.hpp"
#include "doctest.h"
#include "support.hpp"
#include "oracles.hpp"

using namespace citeassist::keywords;

TEST_CASE("data files carry a version header") {
  for (const char* name : {"stopwords.txt", "lemma_exceptions.txt", "e_restore.txt"}) {
    CAPTURE(name);
    CHECK(data_file_version(test_support::read_file(std::string(CITEASSIST_DATA_DIR) + "/" + name)) == 1);
  }
  CHECK(Lexicon::builtin().stopwords().size() == 174);
}

TEST_CASE("lemmatize examples") {
  const Lemmatizer& l = Lexicon::builtin().lemmatizer();
  CHECK(l.lemmatize("networks") == "network");
  CHECK(l.lemmatize("analysis") == "analysis");
  CHECK(l.lemmatize("network") == "network");
  CHECK(l.lemmatize("studies") == "study");
  CHECK(l.lemmatize("ties") == "tie");
  CHECK(l.lemmatize("classes") == "class");
  CHECK(l.lemmatize("boxes") == "box");
  CHECK(l.lemmatize("matches") == "match");
  CHECK(l.lemmatize("caches") == "cache");
  CHECK(l.lemmatize("status") == "status");
  CHECK(l.lemmatize("computing") == "compute");
  CHECK(l.lemmatize("computed") == "compute");
  CHECK(l.lemmatize("running") == "run");
  CHECK(l.lemmatize("stopped") == "stop");
  CHECK(l.lemmatize("falling") == "fall");
  CHECK(l.lemmatize("added") == "add");
  CHECK(l.lemmatize("passed") == "pass");
  CHECK(l.lemmatize("speed") == "speed");
  CHECK(l.lemmatize("parsers") == "parser");
  CHECK(l.lemmatize("parses") == "parser");
  CHECK(l.lemmatize("parsing") == "parser");
  CHECK(l.lemmatize("children") == "child");
}

TEST_CASE("extract_keywords examples") {
  CHECK(extract_keywords("").empty());
  CHECK(extract_keywords("The parser parses parsers. Networks and the network.") ==
        std::vector<std::string>{"parser", "network"});
  CHECK(extract_keywords("alpha beta gamma delta epsilon zeta").size() == 5);
  CHECK(extract_keywords("alpha beta gamma delta epsilon zeta") ==
        std::vector<std::string>{"alpha", "beta", "gamma", "delta", "epsilon"});
  CHECK(extract_keywords("gpt4 gpt4 model x y model").front() == "model");
}

TEST_CASE("normalize_user_keywords examples") {
  CHECK(normalize_user_keywords({"Parsers", "parsing", "parser"}) == std::vector<std::string>{"parser"});
  CHECK(normalize_user_keywords({"the", "of"}).empty());
  CHECK(normalize_user_keywords({"compiler", "compiler"}) == std::vector<std::string>{"compiler"});
  CHECK(normalize_user_keywords({"Machine Learning", "networks"}) ==
        std::vector<std::string>{"machine", "learn", "network"});
}

TEST_CASE("lemmatize is idempotent over a fuzz corpus") {
  const Lemmatizer& l = Lexicon::builtin().lemmatizer();
  std::mt19937 rng(42);
  const std::vector<std::string> suffixes = {"", "s", "es", "ies", "sses", "ing", "ed", "eed", "ss", "us", "is"};
  std::vector<std::string> words;
  for (const auto& [form, lemma] : l.exceptions()) words.push_back(form);
  for (int i = 0; i < 20000; ++i) {
    std::string w;
    const int len = 1 + static_cast<int>(rng() % 9);
    for (int k = 0; k < len; ++k) w += static_cast<char>('a' + rng() % 26);
    words.push_back(w + suffixes[rng() % suffixes.size()]);
  }
  for (const auto& w : test_oracles::corpus_words()) words.push_back(w);
  for (const auto& w : words) {
    const std::string once = l.lemmatize(w);
    CAPTURE(w);
    CHECK(l.lemmatize(once) == once);
  }
}

TEST_CASE("extract_keywords matches the brute-force oracle") {
  const Lexicon& lex = Lexicon::builtin();
  std::mt19937 rng(1234);
  for (int doc = 0; doc < 200; ++doc) {
    const std::string text = test_oracles::synthetic_document(rng);
    CAPTURE(text);
    const auto ours = extract_keywords(text, lex);
    CHECK(ours == test_oracles::oracle_keywords(text, lex));
    CHECK(ours.size() <= 5);
    for (const auto& k : ours) {
      CHECK_FALSE(lex.is_stopword(k));
      CHECK(k.size() >= 2);
      CHECK(std::all_of(k.begin(), k.end(), [](char c) { return c >= 'a' && c <= 'z'; }));
    }
  }
}

TEST_CASE("counts are invariant under sentence shuffling") {
  const Lexicon& lex = Lexicon::builtin();
  std::mt19937 rng(99);
  for (int doc = 0; doc < 50; ++doc) {
    auto sentences = test_oracles::synthetic_sentences(rng, 12);
    std::string a, b;
    for (const auto& s : sentences) a += s + ". ";
    std::shuffle(sentences.begin(), sentences.end(), rng);
    for (const auto& s : sentences) b += s + ". ";
    CHECK(test_oracles::oracle_counts(a, lex) == test_oracles::oracle_counts(b, lex));
  }
}

TEST_CASE("lexicon can be loaded from a directory") {
  const Lexicon lex = Lexicon::from_directory(CITEASSIST_DATA_DIR);
  CHECK(lex.stopwords() == Lexicon::builtin().stopwords());
  CHECK(extract_keywords("The parser parses parsers.", lex) == std::vector<std::string>{"parser"});

  test_support::TempDir dir;
  CHECK_THROWS(Lexicon::from_directory(dir.path()));
}
