#include <random>
#include <regex>

#include "citeassist/bibtex.hpp"
#include "citeassist/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace citeassist;
using namespace citeassist::bibtex;

namespace {

PreprintMetadata paper_metadata() {
  PreprintMetadata m;
  m.entry_type = "inproceedings";
  m.title = "CiteAssist: A System for Automated Preprint Citation and BibTeX Generation";
  m.authors = {"Lars Kaesberg", "Terry Ruas", "Jan Philip Wahle", "Bela Gipp"};
  m.date = {2024, 7, 1};
  m.pages = 15;
  m.extra_fields["confacronym"] = "SDProc @ ACL 2024";
  return m;
}

}  // namespace

TEST_CASE("paper metadata serializes to the appended block") {
  const Entry e = build_entry(paper_metadata());
  CHECK(e.key == "kaesberg2024");
  CHECK(e.type == "inproceedings");
  CHECK(serialize(e) == test_support::fixture("kaesberg2024.bib"));
}

TEST_CASE("fallback metadata entry") {
  PreprintMetadata m;
  m.title = "mypaper";
  m.date = {2024, 7, 1};
  m.pages = 1;
  CHECK(serialize(build_entry(m)) == "@article{anonymous2024,\n title={mypaper},\n pages={1},\n year={2024},\n month={07}\n}");
  m.doi = "10.1000/xyz";
  CHECK(build_entry(m).fields.at("doi") == "10.1000/xyz");
}

TEST_CASE("generate_key") {
  PreprintMetadata m;
  m.date.year = 2020;
  CHECK(generate_key(m) == "anonymous2020");
  m.authors = {"Jos\xC3\xA9 Ni\xC3\xB1o"};
  CHECK(generate_key(m) == "nino2020");
  m.authors = {"Doe, Jane"};
  CHECK(generate_key(m) == "doe2020");
  m.authors = {"Lars Kaesberg", "Terry Ruas"};
  m.date.year = 2024;
  CHECK(generate_key(m) == "kaesberg2024");
  m.authors = {"  "};
  CHECK(generate_key(m) == "anonymous2024");
  m.authors = {"Anna 42"};
  CHECK(generate_key(m) == "anonymous2024");
  m.authors = {"Müller-Lüdenscheidt"};
  CHECK(generate_key(m) == "mullerludenscheidt2024");
}

TEST_CASE("serialize with zero fields") {
  Entry e;
  e.key = "k";
  CHECK(serialize(e) == "@article{k,\n}");
}

TEST_CASE("field order is canonical regardless of insertion") {
  Entry a, b;
  a.key = b.key = "k";
  const std::vector<std::pair<std::string, std::string>> fields = {
      {"zeta", "1"}, {"doi", "d"}, {"author", "A"}, {"month", "01"}, {"abstract", "x"}, {"title", "T"},
      {"year", "2000"}, {"volume", "3"}, {"journal", "J"}, {"pages", "4"}};
  for (const auto& f : fields) a.fields.insert(f);
  for (auto it = fields.rbegin(); it != fields.rend(); ++it) b.fields.insert(*it);
  CHECK(serialize(a) == serialize(b));
  CHECK(serialize(a) ==
        "@article{k,\n author={A},\n title={T},\n journal={J},\n volume={3},\n pages={4},\n year={2000},\n month={01},"
        "\n doi={d},\n abstract={x},\n zeta={1}\n}");
}

TEST_CASE("parse the paper's block") {
  const Entry e = parse(test_support::fixture("kaesberg2024.bib"));
  CHECK(e.type == "inproceedings");
  CHECK(e.key == "kaesberg2024");
  CHECK(e.fields.size() == 6);
  CHECK(e.fields.at("confacronym") == "SDProc @ ACL 2024");

  const MetadataOverrides o = entry_to_metadata(e);
  CHECK(o.title == std::optional<std::string>("CiteAssist: A System for Automated Preprint Citation and BibTeX Generation"));
  REQUIRE(o.authors);
  CHECK(*o.authors == std::vector<std::string>{"Lars Kaesberg", "Terry Ruas", "Jan Philip Wahle", "Bela Gipp"});
  CHECK(o.year == std::optional<int>(2024));
  CHECK(o.month == std::optional<int>(7));
  CHECK(o.pages == std::optional<int>(15));
  CHECK(o.entry_type == std::optional<std::string>("inproceedings"));
  CHECK(o.extra_fields.at("confacronym") == "SDProc @ ACL 2024");
}

TEST_CASE("tolerant parsing") {
  Entry e = parse("@article{k, title=\"T\",}");
  CHECK(e.key == "k");
  CHECK(e.fields.size() == 1);
  CHECK(e.fields.at("title") == "T");

  e = parse("junk before @comment{ignored {nested}} @Article ( key2 ,\n TITLE = {A {Nested} Title} ,\n"
            "  Year = 2021, month = jul, note = \"a\" # \" b\" )");
  CHECK(e.type == "article");
  CHECK(e.key == "key2");
  CHECK(e.fields.at("title") == "A {Nested} Title");
  CHECK(e.fields.at("year") == "2021");
  CHECK(e.fields.at("month") == "jul");
  CHECK(e.fields.at("note") == "a b");
  CHECK(entry_to_metadata(e).month == std::optional<int>(7));

  e = parse("@misc{a,title={one}}\n@misc{b,title={two}}");
  CHECK(e.key == "a");

  e = parse("@misc{title={keyless}}");
  CHECK(e.key.empty());
  CHECK(e.fields.at("title") == "keyless");
}

TEST_CASE("parse errors") {
  try {
    parse("plain prose, no @");
    FAIL("expected NoEntryFound");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NoEntryFound);
  }
  CHECK_THROWS_AS(parse("an email a@b.org is not an entry"), Error);
  try {
    parse("@article{k, title={unclosed}");
    FAIL("expected UnbalancedDelimiters");
  } catch (const SyntaxError& err) {
    CHECK(err.code() == ErrorCode::UnbalancedDelimiters);
    CHECK(err.position() == 8);
  }
  try {
    parse("@article{k, title={a {b}");
    FAIL("expected UnbalancedDelimiters");
  } catch (const SyntaxError& err) {
    CHECK(err.position() == 18);
  }
}

TEST_CASE("author splitting") {
  CHECK(split_authors("Doe, Jane and Roe, Richard") == std::vector<std::string>{"Doe, Jane", "Roe, Richard"});
  CHECK(split_authors("Lars Kaesberg, Terry Ruas") == std::vector<std::string>{"Lars Kaesberg", "Terry Ruas"});
  CHECK(split_authors("Doe, Jane") == std::vector<std::string>{"Doe, Jane"});
  CHECK(split_authors("A  B and\n C D") == std::vector<std::string>{"A B", "C D"});
}

TEST_CASE("entry with only a title maps to a title override only") {
  Entry e;
  e.key = "x";
  e.fields["title"] = "Only";
  MetadataOverrides expected;
  expected.title = "Only";
  CHECK(entry_to_metadata(e) == expected);
}

TEST_CASE("escaping of braces and backslashes") {
  Entry e;
  e.key = "k";
  e.fields["title"] = "a {b} \\c \\";
  CHECK(serialize(e) == "@article{k,\n title={a \\{b\\} \\\\c \\\\}\n}");
  CHECK(parse(serialize(e)) == e);
}

namespace {

std::string random_text(std::mt19937& rng, std::size_t max_len) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ,.;:-_!?@#$%^&*()[]{}{}\\\\\"'=+~/\n\t";
  static const std::vector<std::string> multibyte = {"\xC3\xA9", "\xC3\xB1", "\xE2\x80\x93", "\xF0\x9F\x93\x84"};
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() + multibyte.size() - 1);
  std::string out;
  for (std::size_t i = len(rng); i > 0; --i) {
    const std::size_t p = pick(rng);
    if (p < alphabet.size()) out += alphabet[p];
    else out += multibyte[p - alphabet.size()];
  }
  return out;
}

std::string random_ident(std::mt19937& rng, std::size_t min_len, const std::string& extra = "") {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  const std::string charset = letters + "0123456789" + extra;
  std::uniform_int_distribution<std::size_t> len(min_len, min_len + 10);
  std::string out(1, letters[rng() % letters.size()]);
  for (std::size_t i = len(rng); i > 1; --i) out += charset[rng() % charset.size()];
  return out;
}

}  // namespace

TEST_CASE("round-trip property over generated entries") {
  std::mt19937 rng(20240701);
  static const std::vector<std::string> names = {"author", "title", "journal", "volume", "pages", "year",
                                                 "month",  "doi",   "note",    "url",    "abstract"};
  for (int i = 0; i < 1500; ++i) {
    Entry e;
    static const std::vector<std::string> types = {"article", "inproceedings", "misc", "techreport", "book"};
    e.type = types[rng() % types.size()];
    e.key = random_ident(rng, 1, ":-_.+/");
    REQUIRE(is_valid_key(e.key));
    const std::size_t n = rng() % 9;
    for (std::size_t f = 0; f < n; ++f) {
      std::string name = (rng() % 2) ? names[rng() % names.size()] : random_ident(rng, 2, "-_");
      e.fields[name] = random_text(rng, 40);
    }
    const std::string s = serialize(e);
    CAPTURE(s);
    const Entry back = parse(s);
    CHECK(back == e);
    CHECK(serialize(back) == s);
  }
}

TEST_CASE("generated keys match the key regex") {
  const std::regex shape("^[a-z][a-z0-9]*[0-9]{4}$");
  std::mt19937 rng(7);
  for (int i = 0; i < 500; ++i) {
    PreprintMetadata m;
    m.date.year = static_cast<int>(rng() % 3000);
    if (rng() % 4) m.authors.push_back(random_text(rng, 20));
    const std::string key = generate_key(m);
    CAPTURE(key);
    CHECK(std::regex_match(key, shape));
    CHECK(is_valid_key(key));
  }
}
