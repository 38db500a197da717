#include <random>

#include "citeassist/error.hpp"
#include "citeassist/extraction.hpp"
#include "doctest.h"
#include "stub_server.hpp"
#include "support.hpp"

using namespace citeassist;
using namespace citeassist::extraction;

namespace {

const std::string k_title = "CiteAssist: A System for Automated Preprint Citation and BibTeX Generation";
const std::vector<std::string> k_authors = {"Lars Kaesberg", "Terry Ruas", "Jan Philip Wahle", "Bela Gipp"};

pdf::PageContent page_of(std::vector<pdf::TextRun> runs) {
  pdf::PageContent p;
  p.width = 612;
  p.height = 792;
  p.text_runs = std::move(runs);
  return p;
}

}  // namespace

TEST_CASE("first-page heuristics on the preprint fixture") {
  const auto doc = pdf::parse_pdf(test_support::fixture("citeassist_preprint.pdf"));
  const ExtractorResult r = extract_first_page_metadata(doc.page(0), "citeassist_preprint.pdf");
  CHECK(r.title == std::optional<std::string>(k_title));
  REQUIRE(r.authors);
  CHECK(*r.authors == k_authors);
  CHECK_FALSE(r.date);
  CHECK_FALSE(r.keywords);
}

TEST_CASE("first-page heuristics on blank and synthetic pages") {
  const auto blank = pdf::parse_pdf(test_support::fixture("mypaper.pdf"));
  CHECK(extract_first_page_metadata(blank.page(0), "mypaper.pdf").empty());

  // Two runs at the same maximal size: the higher one is the title.
  auto tie = page_of({{"Upper Heading Text", 20, 72, 100}, {"Ada Lovelace, Alan Turing", 11, 72, 120},
                      {"Lower Heading Text", 20, 72, 250}, {"body text", 10, 72, 300}});
  auto r = extract_first_page_metadata(tie);
  CHECK(r.title == std::optional<std::string>("Upper Heading Text"));
  CHECK(r.authors == std::optional<std::vector<std::string>>({"Ada Lovelace", "Alan Turing"}));

  // Bigger text in the bottom half is ignored.
  auto bottom = page_of({{"Real Title", 18, 72, 90}, {"Huge Footer", 40, 72, 700}});
  CHECK(extract_first_page_metadata(bottom).title == std::optional<std::string>("Real Title"));

  // A two-line title joins; a distant same-size line starts a new group and
  // the longer group wins.
  auto lines = page_of({{"PREPRINT", 16, 72, 40}, {"A Long Title That", 16, 72, 120}, {"Spans Two Lines", 16, 72, 140},
                        {"J. R. Doe1, Mary-Ann van der Berg*", 10, 72, 165},
                        {"Department of Things, Some University", 9, 72, 180}, {"Not An Author", 10, 72, 200}});
  r = extract_first_page_metadata(lines);
  CHECK(r.title == std::optional<std::string>("A Long Title That Spans Two Lines"));
  CHECK(r.authors == std::optional<std::vector<std::string>>({"J. R. Doe", "Mary-Ann van der Berg"}));

  // Lines below the title that are not names give no authors.
  auto prose = page_of({{"Title Only", 18, 72, 90}, {"we study some things in detail", 10, 72, 120}});
  r = extract_first_page_metadata(prose);
  CHECK(r.title == std::optional<std::string>("Title Only"));
  CHECK_FALSE(r.authors);
}

TEST_CASE("TEI header mapping") {
  const ExtractorResult r = parse_tei_header(test_support::fixture("http/grobid_header.tei.xml"));
  CHECK(r.title == std::optional<std::string>(k_title));
  CHECK(r.authors == std::optional<std::vector<std::string>>(k_authors));
  CHECK(r.date == std::optional<CalendarDate>(CalendarDate{2024, 7, 1}));
  CHECK(r.keywords == std::optional<std::vector<std::string>>({"preprints", "BibTeX generation"}));

  CHECK(parse_tei_header(test_support::fixture("http/grobid_empty.tei.xml")).empty());
  CHECK(parse_tei_header("").empty());
  CHECK_THROWS_AS(parse_tei_header("<not-closed"), Error);
}

TEST_CASE("external extractor over HTTP") {
  std::string received;
  test_support::StubServer server([&](httplib::Server& s) {
    s.Post("/ok/api/processHeaderDocument", [&](const httplib::Request& req, httplib::Response& res) {
      received = req.has_file("input") ? req.get_file_value("input").content : "";
      res.set_content(test_support::fixture("http/grobid_header.tei.xml"), "application/xml");
    });
    s.Post("/none/api/processHeaderDocument", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    s.Post("/broken/api/processHeaderDocument",
           [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  });
  const std::string pdf = test_support::fixture("two_page.pdf");
  const ExtractorResult r = fetch_external_metadata(pdf, server.url("/ok/"), 5);
  CHECK(received == pdf);
  CHECK(r.title == std::optional<std::string>(k_title));
  CHECK(fetch_external_metadata(pdf, server.url("/none"), 5).empty());
  try {
    fetch_external_metadata(pdf, server.url("/broken"), 5);
    FAIL("expected ServiceError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ServiceError);
  }
  try {
    fetch_external_metadata(pdf, "http://127.0.0.1:" + std::to_string(test_support::closed_port()), 5);
    FAIL("expected ServiceUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ServiceUnavailable);
  }
}

TEST_CASE("merge_metadata examples") {
  const CalendarDate today{2024, 7, 1};
  PreprintMetadata m = merge_metadata({}, {}, {}, {}, "mypaper.pdf", 1, today);
  CHECK(m.title == "mypaper");
  CHECK(m.entry_type == "article");
  CHECK(m.date == CalendarDate{2024, 7, 1});
  CHECK(m.pages == 1);
  CHECK(m.authors.empty());
  CHECK(m.provenance.at("title") == Provenance::Fallback);
  CHECK(m.provenance.at("date") == Provenance::Fallback);
  CHECK(m.provenance.at("entry_type") == Provenance::Fallback);
  CHECK_FALSE(m.provenance.contains("authors"));

  MetadataOverrides user;
  user.title = "X";
  ExtractorResult external;
  external.title = "Y";
  external.authors = std::vector<std::string>{"Ext Author"};
  ExtractorResult heuristic;
  heuristic.authors = std::vector<std::string>{"Heur Author"};
  m = merge_metadata(user, external, heuristic, {}, "f.pdf", 3, today);
  CHECK(m.title == "X");
  CHECK(m.provenance.at("title") == Provenance::UserOverride);
  CHECK(m.authors == std::vector<std::string>{"Ext Author"});
  CHECK(m.provenance.at("authors") == Provenance::ExternalExtractor);
  CHECK(m.pages == 3);

  pdf::InfoDictionary info;
  info.title = "Info Title";
  info.author = "Doe, Jane and Roe, Richard";
  info.creation_date = CalendarDate{2021, 3, 14};
  m = merge_metadata({}, {}, {}, info, "f.pdf", 2, today);
  CHECK(m.title == "Info Title");
  CHECK(m.authors == std::vector<std::string>{"Doe, Jane", "Roe, Richard"});
  CHECK(m.date == CalendarDate{2021, 3, 1});
  CHECK(m.provenance.at("date") == Provenance::PdfInfo);

  MetadataOverrides year_only;
  year_only.year = 2019;
  m = merge_metadata(year_only, {}, {}, info, "f.pdf", 2, today);
  CHECK(m.date == CalendarDate{2019, 3, 1});
  CHECK(m.provenance.at("date") == Provenance::UserOverride);

  CHECK(merge_metadata({}, {}, {}, {}, "/tmp/  my   file .v2.pdf", 1, today).title == "my file .v2");
  CHECK(merge_metadata({}, {}, {}, {}, ".pdf", 1, today).title == ".pdf");
  CHECK(merge_metadata({}, {}, {}, {}, "", 1, today).title == "untitled");
}

TEST_CASE("merge precedence is a pure priority order") {
  std::mt19937 rng(31);
  const CalendarDate today{2030, 12, 1};
  for (int i = 0; i < 2000; ++i) {
    MetadataOverrides user;
    ExtractorResult external, heuristic;
    pdf::InfoDictionary info;
    if (rng() % 2) user.title = "user";
    if (rng() % 2) external.title = "external";
    if (rng() % 2) heuristic.title = "heuristic";
    if (rng() % 2) info.title = "info";
    if (rng() % 2) user.authors = std::vector<std::string>{"U Ser"};
    if (rng() % 2) external.authors = std::vector<std::string>{"E Xt"};
    if (rng() % 2) heuristic.authors = std::vector<std::string>{"H Eur"};
    if (rng() % 2) info.author = "I Nfo";
    if (rng() % 2) external.date = CalendarDate{2001, 2, 1};
    if (rng() % 2) info.creation_date = CalendarDate{2003, 4, 1};
    if (rng() % 3 == 0) user.year = 1999;
    if (rng() % 3 == 0) user.month = 11;

    const PreprintMetadata m = merge_metadata(user, external, heuristic, info, "stem.pdf", 7, today);
    CAPTURE(i);
    const std::string want_title = user.title       ? "user"
                                   : external.title ? "external"
                                   : heuristic.title ? "heuristic"
                                   : info.title      ? "info"
                                                     : "stem";
    CHECK(m.title == want_title);
    const std::string want_author = user.authors       ? "U Ser"
                                    : external.authors ? "E Xt"
                                    : heuristic.authors ? "H Eur"
                                    : info.author       ? "I Nfo"
                                                        : "";
    CHECK(m.authors == (want_author.empty() ? std::vector<std::string>{} : std::vector<std::string>{want_author}));
    CalendarDate want_date = external.date ? *external.date : info.creation_date ? *info.creation_date : today;
    if (user.year) want_date.year = *user.year;
    if (user.month) want_date.month = *user.month;
    want_date.day = 1;
    CHECK(m.date == want_date);
    CHECK(m.pages == 7);
    CHECK(m == merge_metadata(user, external, heuristic, info, "stem.pdf", 7, today));
  }
}

TEST_CASE("pipeline fallback chain") {
  const auto doc = pdf::parse_pdf(test_support::fixture("mypaper.pdf"));
  PipelineOptions opts;
  opts.today = {2024, 7, 1};
  opts.extractor_url = "http://127.0.0.1:" + std::to_string(test_support::closed_port());
  opts.extractor_timeout_seconds = 2;
  const PipelineResult r = extract_metadata(doc, "mypaper.pdf", opts);
  CHECK(r.metadata.entry_type == "article");
  CHECK(r.metadata.title == "mypaper");
  CHECK(r.metadata.date == CalendarDate{2024, 7, 1});
  CHECK(r.metadata.pages == static_cast<int>(doc.page_count()));
  CHECK(r.metadata.keywords.empty());
  REQUIRE(r.extractor_error);
  CHECK(r.extractor_error->rfind("SERVICE_UNAVAILABLE", 0) == 0);
}

TEST_CASE("pipeline on the preprint fixture") {
  const auto doc = pdf::parse_pdf(test_support::fixture("citeassist_preprint.pdf"));
  PipelineOptions opts;
  opts.today = {2030, 1, 1};
  const PipelineResult r = extract_metadata(doc, "citeassist_preprint.pdf", opts);
  CHECK(r.metadata.title == k_title);
  CHECK(r.metadata.provenance.at("title") == Provenance::FirstPageHeuristic);
  CHECK(r.metadata.authors == k_authors);
  CHECK(r.metadata.date == CalendarDate{2024, 7, 1});
  CHECK(r.metadata.pages == 15);
  CHECK(r.metadata.keywords.size() == 5);
  CHECK_FALSE(r.extractor_error);

  opts.overrides.keywords = std::vector<std::string>{"Networks", "the"};
  CHECK(extract_metadata(doc, "x.pdf", opts).metadata.keywords == std::vector<std::string>{"network"});
}
