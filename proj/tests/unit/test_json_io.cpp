#include "citeassist/json_io.hpp"

#include "citeassist/error.hpp"
#include "doctest.h"
#include "paper_fixture.hpp"

using namespace citeassist;
using namespace citeassist::json_io;

TEST_CASE("metadata round trip") {
  auto m = test_support::paper_metadata();
  m.venue = "Proceedings";
  m.keywords = {"preprint", "citation"};
  m.provenance["title"] = Provenance::UserOverride;
  m.provenance["date"] = Provenance::Fallback;
  const json j = to_json(m);
  CHECK(j["provenance"]["date"] == "fallback");
  CHECK(j["doi"].is_null());
  CHECK(metadata_from_json(parse(j.dump())) == m);
}

TEST_CASE("metadata validation") {
  auto rejects = [](const char* text) {
    try {
      metadata_from_json(parse(text));
    } catch (const Error& e) {
      return e.code() == ErrorCode::InvalidInput;
    }
    return false;
  };
  CHECK(rejects("{}"));
  CHECK(rejects(R"({"title": ""})"));
  CHECK(rejects(R"({"title": "t", "month": 13})"));
  CHECK(rejects(R"({"title": "t", "authors": "a"})"));
  CHECK(rejects(R"({"title": "t", "provenance": {"title": "guess"}})"));
  CHECK(rejects("[1, 2"));
  CHECK(metadata_from_json(parse(R"({"title": "t", "year": "2020"})")).date.year == 2020);
}

TEST_CASE("overrides keep absent slots empty") {
  const auto o = overrides_from_json(parse(R"({"title": "T", "year": 2021, "venue": null})"));
  CHECK(o.title == std::optional<std::string>("T"));
  CHECK(o.year == std::optional<int>(2021));
  CHECK_FALSE(o.venue);
  CHECK_FALSE(o.authors);
  CHECK(overrides_from_json(to_json(o)) == o);
}

TEST_CASE("related paper and entry shapes") {
  const auto p = test_support::connected_papers_article();
  CHECK(paper_from_json(to_json(p)) == p);
  const json r = to_json(related::RankedMatch{p, 3});
  CHECK(r["match_count"] == 3);
  CHECK(r["id"] == p.id);
  const auto e = bibtex::build_entry(test_support::paper_metadata());
  CHECK(entry_from_json(to_json(e)) == e);
}
