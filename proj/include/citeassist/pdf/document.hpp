#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace citeassist {

struct CalendarDate {
  int year = 0;
  int month = 1;
  int day = 1;
  bool operator==(const CalendarDate&) const = default;
};

}  // namespace citeassist

namespace citeassist::pdf {

// Axis-aligned rectangle in PDF user space (origin bottom-left, points).
struct Rect {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;
  bool contains(const Rect& inner, double tolerance = 0.01) const;
  bool operator==(const Rect&) const = default;
};

struct TextRun {
  std::string text;  // UTF-8
  double font_size = 0;
  double x = 0;  // from the left edge of the media box
  double y = 0;  // baseline, measured top-down from the top of the media box
};

struct PageContent {
  std::size_t page_index = 0;
  // Reading order: top to bottom, then left to right within a line.
  std::vector<TextRun> text_runs;
  double width = 0;
  double height = 0;
};

// Document information dictionary. Empty or whitespace-only entries are
// reported as absent.
struct InfoDictionary {
  std::optional<std::string> title;
  std::optional<std::string> author;
  std::optional<CalendarDate> creation_date;
};

struct LinkTarget {
  std::size_t page_index = 0;
  Rect rectangle;
};

struct LinkAnnotation {
  Rect rect;
  std::optional<std::size_t> destination_page;  // absent for external/unresolved links
  std::string name;                             // the annotation's /NM, may be empty
};

enum class FontFace { Courier, Helvetica, HelveticaBold };

// Advance width of text set in one of the writer's standard fonts.
double text_width(FontFace face, double size, std::string_view utf8);

struct TextLine {
  std::string text;  // UTF-8; characters outside WinAnsi render as '?'
  double x = 0;      // baseline origin in PDF user space
  double y = 0;
  FontFace font = FontFace::Helvetica;
  double size = 10;
};

struct Box {
  Rect rect;
  double line_width = 1;
  std::optional<double> fill_gray;  // 0 black .. 1 white
};

// Description of a page the writer can emit. Zero width/height means
// "same size as the document's last page".
struct RenderedPage {
  double width = 0;
  double height = 0;
  std::vector<Box> boxes;
  std::vector<TextLine> lines;
  bool operator==(const RenderedPage&) const;
};

struct ButtonStyle {
  std::string label = "Citation";
  double font_size = 10;
  double border_width = 1;
  double fill_gray = 0.93;
  std::string annotation_name = "citeassist-button";
  // Remove earlier links (and their drawn buttons) carrying the same name
  // from the source page before adding the new one.
  bool replace_existing = false;
};

// Immutable parsed PDF. Operations that modify a document return a new one
// built as an incremental update, so the original bytes stay a prefix of
// the result.
class PdfDocument {
 public:
  struct Impl;

  std::size_t page_count() const;
  const std::vector<PageContent>& pages() const;
  const PageContent& page(std::size_t index) const;
  const InfoDictionary& info() const;
  Rect media_box(std::size_t index) const;
  std::vector<LinkAnnotation> links(std::size_t page_index) const;
  std::string_view bytes() const;

  const Impl& impl() const { return *impl_; }
  explicit PdfDocument(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<const Impl> impl_;
};

// Errors: MalformedPdf, EncryptedPdf.
PdfDocument parse_pdf(std::string_view bytes);
std::string serialize(const PdfDocument& doc);

// Runs of the page joined with '\n'. Errors: PageOutOfRange.
std::string extract_page_text(const PdfDocument& doc, std::size_t page_index);
std::size_t count_pages(const PdfDocument& doc);

// Throws std::invalid_argument when new_pages is empty; RenderFailure when
// a page cannot be encoded.
PdfDocument append_pages(const PdfDocument& doc, std::span<const RenderedPage> new_pages);

// Adds a GoTo link on source.page_index covering source.rectangle and draws
// a labelled button beneath it. Errors: PageOutOfRange.
PdfDocument add_link(const PdfDocument& doc, const LinkTarget& source, const LinkTarget& destination,
                     const ButtonStyle& style = {});

}  // namespace citeassist::pdf
