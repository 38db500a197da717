#include <chrono>
#include <random>

#include "citeassist/error.hpp"
#include "citeassist/related.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "stub_server.hpp"
#include "support.hpp"

using namespace citeassist;
using namespace citeassist::related;

namespace {

RelatedPaper paper(std::string id, std::vector<std::string> kws, std::optional<int> year = std::nullopt,
                   std::string title = "T") {
  RelatedPaper p;
  p.id = std::move(id);
  p.title = std::move(title);
  p.authors = "A";
  p.year = year;
  p.keywords = std::move(kws);
  return p;
}

std::vector<std::pair<std::string, std::size_t>> ids(const std::vector<RankedMatch>& matches) {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& m : matches) out.emplace_back(m.paper.id, m.match_count);
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("find_related examples") {
  const std::vector<RelatedPaper> store = {paper("P1", {"a", "b", "c"}), paper("P2", {"a"}), paper("P3", {"x"})};
  CHECK(ids(find_related({"a", "b"}, store)) == std::vector<std::pair<std::string, std::size_t>>{{"P1", 2}, {"P2", 1}});
  CHECK(find_related({}, store).empty());

  std::vector<RelatedPaper> seven;
  for (int i = 0; i < 7; ++i) seven.push_back(paper("Q" + std::to_string(i), {"k"}, 2000 + i));
  const auto top = find_related({"k"}, seven);
  CHECK(top.size() == 5);
  CHECK(top.front().paper.id == "Q6");
}

TEST_CASE("find_related tie-breaks and exclusion") {
  const std::vector<RelatedPaper> store = {paper("a", {"k"}, std::nullopt, "Alpha"), paper("b", {"k"}, 2019, "Zeta"),
                                           paper("c", {"k"}, 2019, "Beta"), paper("d", {"k", "k"}, 2020, "Gamma"),
                                           paper("self", {"k"}, 2024, "Self")};
  CHECK(ids(find_related({"k", "k"}, store, std::string("self"))) ==
        std::vector<std::pair<std::string, std::size_t>>{{"d", 1}, {"c", 1}, {"b", 1}, {"a", 1}});
}

TEST_CASE("find_related matches the brute-force oracle") {
  std::mt19937 rng(555);
  for (int round = 0; round < 300; ++round) {
    const std::size_t universe = 1 + rng() % 10;
    const auto store = test_oracles::random_store(rng, 50, universe);
    const auto query = test_oracles::random_query(rng, universe);
    std::optional<std::string> exclude;
    if (!store.empty() && rng() % 2) exclude = store[rng() % store.size()].id;
    const auto got = find_related(query, store, exclude);
    CHECK(ids(got) == test_oracles::oracle_related(query, store, exclude));
    CHECK(got.size() <= 5);
    for (const auto& m : got) CHECK((!exclude || m.paper.id != *exclude));

    // Adding a keyword never lowers a match count.
    auto bigger = query;
    bigger.push_back("k" + std::to_string(rng() % universe));
    const auto all_before = find_related(query, store, exclude, store.size());
    const auto all_after = find_related(bigger, store, exclude, store.size());
    for (const auto& m : all_before) {
      auto it = std::find_if(all_after.begin(), all_after.end(), [&](const RankedMatch& n) { return n.paper.id == m.paper.id; });
      REQUIRE(it != all_after.end());
      CHECK(it->match_count >= m.match_count);
    }
  }
}

TEST_CASE("identifier shapes") {
  CHECK(normalize_doi("10.29173/istl2760") == std::optional<std::string>("10.29173/istl2760"));
  CHECK(normalize_doi(" https://doi.org/10.29173/istl2760 ") == std::optional<std::string>("10.29173/istl2760"));
  CHECK(normalize_doi("doi:10.1000/abc(1)") == std::optional<std::string>("10.1000/abc(1)"));
  CHECK_FALSE(normalize_doi("not-a-doi"));
  CHECK_FALSE(normalize_doi("10.12/short"));
  CHECK_FALSE(normalize_doi("10.1000/"));

  CHECK(normalize_arxiv_id("2407.00000v1") == std::optional<std::string>("2407.00000v1"));
  CHECK(normalize_arxiv_id("arXiv:2101.00001") == std::optional<std::string>("2101.00001"));
  CHECK(normalize_arxiv_id("hep-th/9901001") == std::optional<std::string>("hep-th/9901001"));
  CHECK(normalize_arxiv_id("math.GT/0309136v2") == std::optional<std::string>("math.GT/0309136v2"));
  CHECK(normalize_arxiv_id("https://arxiv.org/abs/1706.03762") == std::optional<std::string>("1706.03762"));
  CHECK_FALSE(normalize_arxiv_id("abc/123"));
  CHECK_FALSE(normalize_arxiv_id("2407.123"));

  CHECK(code_of([] { resolve_doi("not-a-doi"); }) == ErrorCode::MalformedDoi);
  CHECK(code_of([] { resolve_arxiv("abc/123"); }) == ErrorCode::MalformedArxivId);
}

TEST_CASE("resolve_doi against a recorded response") {
  std::string seen_path;
  test_support::StubServer server([&](httplib::Server& s) {
    s.Get(R"(/works/(.+))", [&](const httplib::Request& req, httplib::Response& res) {
      seen_path = req.path;
      if (req.matches[1] == "10.29173/istl2760") {
        res.set_content(test_support::fixture("http/crossref_istl2760.json"), "application/json");
      } else {
        res.status = 404;
        res.set_content("Resource not found.", "text/plain");
      }
    });
  });
  ResolverConfig cfg;
  cfg.doi_base = server.url("/works/");
  cfg.timeout_seconds = 5;

  const RelatedPaper p = resolve_doi("https://doi.org/10.29173/istl2760", cfg);
  CHECK(seen_path == "/works/10.29173/istl2760");
  CHECK(p.title == "Visual Exploration of Literature Using Connected Papers: A Practical Approach");
  CHECK(p.authors == "Behera, Prashanta Kumar and Jain, Sanmati Jinendran and Kumar, Ashok");
  CHECK(p.year == std::optional<int>(2023));
  CHECK(p.url == std::optional<std::string>("http://dx.doi.org/10.29173/istl2760"));
  CHECK(p.doi == std::optional<std::string>("10.29173/istl2760"));
  CHECK(p.keywords.empty());

  CHECK(code_of([&] { resolve_doi("10.1000/missing", cfg); }) == ErrorCode::NotFound);

  ResolverConfig dead = cfg;
  dead.doi_base = "http://127.0.0.1:" + std::to_string(test_support::closed_port()) + "/works/";
  CHECK(code_of([&] { resolve_doi("10.29173/istl2760", dead); }) == ErrorCode::ServiceUnavailable);
}

TEST_CASE("resolve_arxiv against recorded responses") {
  std::string seen_query;
  test_support::StubServer server([&](httplib::Server& s) {
    s.Get("/api/query", [&](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.get_param_value("id_list");
      seen_query = id;
      if (id == "2101.00001") res.set_content(test_support::fixture("http/arxiv_2101.00001.xml"), "application/atom+xml");
      else if (id == "9912.99999") res.set_content(test_support::fixture("http/arxiv_error.xml"), "application/atom+xml");
      else if (id == "2401.99999") res.set_content(test_support::fixture("http/arxiv_empty.xml"), "application/atom+xml");
      else res.status = 404;
    });
  });
  ResolverConfig cfg;
  cfg.arxiv_base = server.url("/api/query");
  cfg.timeout_seconds = 5;

  const RelatedPaper p = resolve_arxiv("arXiv:2101.00001", cfg);
  CHECK(seen_query == "2101.00001");
  CHECK(p.id == "arxiv:2101.00001");
  CHECK(p.title == "Keyword Matching for Citation Recommendation");
  CHECK(p.authors == "Ada Example and Grace Sample");
  CHECK(p.year == std::optional<int>(2020));
  CHECK(p.url == std::optional<std::string>("http://arxiv.org/abs/2101.00001v2"));
  CHECK(p.doi == std::optional<std::string>("10.1000/example.2021.1"));
  CHECK(p.keywords.empty());

  CHECK(code_of([&] { resolve_arxiv("9912.99999", cfg); }) == ErrorCode::NotFound);
  CHECK(code_of([&] { resolve_arxiv("2401.99999", cfg); }) == ErrorCode::NotFound);
  CHECK(code_of([&] { resolve_arxiv("2402.00001", cfg); }) == ErrorCode::NotFound);
}

TEST_CASE("crossref mapping edge cases") {
  const RelatedPaper p = paper_from_crossref(
      R"({"message":{"title":["  Spaced   title "],"author":[{"name":"The Consortium"},{"family":"Solo"}],)"
      R"("issued":{"date-parts":[["2019"]]}}})",
      "10.1000/x");
  CHECK(p.title == "Spaced title");
  CHECK(p.authors == "The Consortium and Solo");
  CHECK(p.year == std::optional<int>(2019));
  CHECK(p.url == std::optional<std::string>("https://doi.org/10.1000/x"));
  CHECK(code_of([] { paper_from_crossref("{not json", "10.1000/x"); }) == ErrorCode::ServiceError);
  CHECK(code_of([] { paper_from_crossref(R"({"message":{}})", "10.1000/x"); }) == ErrorCode::ServiceError);
}
