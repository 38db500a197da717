#include <algorithm>
#include <functional>
#include <sstream>

#include "citeassist/error.hpp"
#include "citeassist/pdf/document.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace citeassist;
using namespace citeassist::pdf;
using test_support::fixture;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("page counts match the fixtures") {
  CHECK(count_pages(parse_pdf(fixture("citeassist_preprint.pdf"))) == 15);
  CHECK(count_pages(parse_pdf(fixture("two_page.pdf"))) == 2);
  CHECK(count_pages(parse_pdf(fixture("mypaper.pdf"))) == 1);
  CHECK(count_pages(parse_pdf(fixture("objstream.pdf"))) == 1);
}

TEST_CASE("rejects non-pdf and encrypted input") {
  CHECK(code_of([] { parse_pdf("not a pdf"); }) == ErrorCode::MalformedPdf);
  CHECK(code_of([] { parse_pdf(""); }) == ErrorCode::MalformedPdf);
  CHECK(code_of([] { parse_pdf("%PDF-1.4\n%%EOF\n"); }) == ErrorCode::MalformedPdf);
  CHECK(code_of([] { parse_pdf(fixture("encrypted.pdf")); }) == ErrorCode::EncryptedPdf);
}

TEST_CASE("info dictionary") {
  auto doc = parse_pdf(fixture("citeassist_preprint.pdf"));
  REQUIRE(doc.info().title);
  CHECK(*doc.info().title == "CiteAssist");
  CHECK_FALSE(doc.info().author);
  REQUIRE(doc.info().creation_date);
  CHECK(doc.info().creation_date->year == 2024);
  CHECK(doc.info().creation_date->month == 7);

  auto blank = parse_pdf(fixture("mypaper.pdf"));
  CHECK_FALSE(blank.info().title);
  CHECK_FALSE(blank.info().author);
  CHECK_FALSE(blank.info().creation_date);
  CHECK(blank.page(0).text_runs.empty());

  auto uni = parse_pdf(fixture("tounicode.pdf"));
  CHECK(uni.info().title == std::optional<std::string>("T\xC3\xA9st"));
  CHECK(uni.info().author == std::optional<std::string>("Ren\xC3\xA9 Tester"));
  CHECK(uni.info().creation_date == std::optional<CalendarDate>(CalendarDate{2023, 9, 15}));
}

TEST_CASE("title page runs") {
  auto doc = parse_pdf(fixture("citeassist_preprint.pdf"));
  const auto& runs = doc.page(0).text_runs;
  REQUIRE(runs.size() >= 4);
  CHECK(runs[0].text == "CiteAssist: A System for Automated Preprint");
  CHECK(runs[0].font_size == doctest::Approx(24));
  CHECK(runs[1].text == "Citation and BibTeX Generation");
  CHECK(runs[2].text == "Lars Kaesberg, Terry Ruas, Jan Philip Wahle, Bela Gipp");
  CHECK(runs[2].font_size == doctest::Approx(11));
  CHECK(runs[0].y < runs[1].y);
}

TEST_CASE("page_out_of_range") {
  auto doc = parse_pdf(fixture("two_page.pdf"));
  CHECK(code_of([&] { extract_page_text(doc, 2); }) == ErrorCode::PageOutOfRange);
  CHECK(extract_page_text(doc, 0) == "Page 1 first line\nPage 1 second line");
}

TEST_CASE("multicolumn text agrees with the pypdf oracle as a line multiset") {
  auto doc = parse_pdf(fixture("multicolumn.pdf"));
  auto ours = lines_of(extract_page_text(doc, 0));
  auto oracle = lines_of(fixture("multicolumn.pypdf.txt"));
  std::sort(ours.begin(), ours.end());
  std::sort(oracle.begin(), oracle.end());
  CHECK(ours == oracle);
}

TEST_CASE("ToUnicode, Differences and ligatures") {
  auto doc = parse_pdf(fixture("tounicode.pdf"));
  auto lines = lines_of(extract_page_text(doc, 0));
  CHECK(std::find(lines.begin(), lines.end(), "Hi\xC3\xA9") != lines.end());
  CHECK(std::find(lines.begin(), lines.end(), "find the efficient way") != lines.end());
}

TEST_CASE("object streams and xref streams") {
  auto doc = parse_pdf(fixture("objstream.pdf"));
  CHECK(extract_page_text(doc, 0) == "Object stream page");
  CHECK(doc.info().title == std::optional<std::string>("Object Streams"));
  CHECK(doc.info().author == std::optional<std::string>("Ada Lovelace"));
}

TEST_CASE("serialize round-trips bytes") {
  const std::string bytes = fixture("two_page.pdf");
  CHECK(serialize(parse_pdf(bytes)) == bytes);
}

TEST_CASE("append_pages keeps the original as a prefix") {
  for (const char* name : {"two_page.pdf", "objstream.pdf", "mypaper.pdf", "citeassist_preprint.pdf"}) {
    CAPTURE(name);
    const std::string bytes = fixture(name);
    auto doc = parse_pdf(bytes);
    RenderedPage page;
    page.lines.push_back({"Appended page", 72, 700, FontFace::HelveticaBold, 16});
    page.lines.push_back({"@article{x,", 72, 680, FontFace::Courier, 9});
    page.boxes.push_back({{60, 600, 400, 100}, 1, 0.95});
    std::vector<RenderedPage> pages{page, page};
    auto out = append_pages(doc, pages);
    const std::string result = serialize(out);
    CHECK(result.compare(0, bytes.size(), bytes) == 0);
    CHECK(out.page_count() == doc.page_count() + 2);
    CHECK(extract_page_text(out, doc.page_count()) == "Appended page\n@article{x,");
    CHECK(out.media_box(doc.page_count()).width == doc.media_box(doc.page_count() - 1).width);
  }
  CHECK_THROWS_AS(append_pages(parse_pdf(fixture("two_page.pdf")), {}), std::invalid_argument);
}

TEST_CASE("add_link points at the destination page") {
  auto doc = parse_pdf(fixture("two_page.pdf"));
  RenderedPage page;
  page.lines.push_back({"Citation", 72, 700, FontFace::HelveticaBold, 16});
  std::vector<RenderedPage> pages{page};
  auto appended = append_pages(doc, pages);
  const Rect button{500, 750, 70, 20};
  auto linked = add_link(appended, {0, button}, {2, {}});
  auto links = linked.links(0);
  REQUIRE(links.size() == 1);
  CHECK(links[0].destination_page == std::optional<std::size_t>(2));
  CHECK(links[0].rect == button);
  CHECK(linked.media_box(0).contains(links[0].rect));
  CHECK(extract_page_text(linked, 0).find("Citation") != std::string::npos);
  CHECK(extract_page_text(linked, 0).find("Page 1 first line") != std::string::npos);

  ButtonStyle again;
  again.replace_existing = true;
  auto relinked = add_link(linked, {0, button}, {2, {}}, again);
  CHECK(relinked.links(0).size() == 1);
  auto text = extract_page_text(relinked, 0);
  CHECK(text.find("Citation") == text.rfind("Citation"));

  auto twice = add_link(linked, {0, button}, {2, {}});
  CHECK(twice.links(0).size() == 2);

  CHECK(code_of([&] { add_link(linked, {5, button}, {0, {}}); }) == ErrorCode::PageOutOfRange);
}

TEST_CASE("text_width uses standard metrics") {
  CHECK(text_width(FontFace::Courier, 10, "abcd") == doctest::Approx(24));
  CHECK(text_width(FontFace::Helvetica, 1000, "A") == doctest::Approx(667000.0 / 1000));
}
