#pragma once

#include <optional>
#include <string>
#include <vector>

#include "citeassist/bibtex.hpp"
#include "citeassist/pdf/document.hpp"
#include "citeassist/related.hpp"

namespace citeassist::annotator {

struct AnnotationLayout {
  // Zero means "same as the document's last page".
  double page_width = 0;
  double page_height = 0;
  double margin = 56;
  double padding = 8;
  double border_width = 1;
  double body_size = 9;      // Courier, shrunk down to min_body_size for wide entries
  double min_body_size = 5;
  double heading_size = 16;  // Helvetica-Bold
  double text_size = 10;     // Helvetica
  std::string heading = "Citation";
  std::string related_heading = "Related Papers";
  // Button on page 1, measured from the top-right corner of its media box
  // unless button_rect is given.
  double button_width = 70;
  double button_height = 20;
  double button_inset = 18;
  std::optional<pdf::Rect> button_rect;
  std::string button_label = "Citation";
};

struct AnnotationBundle {
  bibtex::Entry entry;
  std::vector<related::RelatedPaper> related;
  std::optional<std::string> webview_url;
  AnnotationLayout layout;
};

// "Authors. Title. URL. Year." with absent parts left out. The URL falls
// back to the doi.org form of the DOI.
std::string format_related(const related::RelatedPaper& paper);

// Heading, optional "Online version: <url>" line, a bordered monospace box
// with serialize(entry), and the related papers. The box only breaks
// between fields. Errors: RenderFailure when a page has no usable area.
std::vector<pdf::RenderedPage> render_annotation_pages(const AnnotationBundle& bundle, double page_width = 612,
                                                       double page_height = 792);

pdf::Rect button_rect(const pdf::PdfDocument& doc, const AnnotationLayout& layout);

// Appends the annotation pages and links a title-page button to the first
// of them, replacing a button left by an earlier run.
pdf::PdfDocument annotate_pdf(const pdf::PdfDocument& doc, const AnnotationBundle& bundle);

// Escapes % # & _ { } $ ~ ^ and backslash.
std::string latex_escape(std::string_view s);

// Include file for a LaTeX source; needs the package from latex_style().
std::string render_latex(const AnnotationBundle& bundle);
const std::string& latex_style();

}  // namespace citeassist::annotator
