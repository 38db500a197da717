#include "citeassist/annotator.hpp"

#include <algorithm>

#include "citeassist/error.hpp"
#include "citeassist/text_util.hpp"

namespace citeassist::annotator {

namespace {

#include "citeassist_data.inc"

using pdf::FontFace;

// Greedy word wrap at single spaces, which are dropped at the break.
// Words wider than the line are cut between characters.
std::vector<std::string> wrap(const std::string& text, FontFace face, double size, double max_width) {
  auto fits = [&](const std::string& s) { return pdf::text_width(face, size, s) <= max_width; };
  std::vector<std::string> lines;
  std::string cur;
  bool started = false;
  for (const auto& word : text::split(text, ' ')) {
    const std::string candidate = started ? cur + " " + word : word;
    if (fits(candidate)) {
      cur = candidate;
      started = true;
      continue;
    }
    if (started) lines.push_back(cur);
    cur.clear();
    for (char32_t cp : text::decode_utf8(word)) {
      std::string next = cur;
      text::append_utf8(next, cp);
      if (!cur.empty() && !fits(next)) {
        lines.push_back(cur);
        cur.clear();
        text::append_utf8(cur, cp);
      } else {
        cur = std::move(next);
      }
    }
    started = true;
  }
  lines.push_back(cur);
  return lines;
}

class Composer {
 public:
  Composer(const AnnotationLayout& layout, double width, double height)
      : l_(layout), width_(width), height_(height) {
    if (width - 2 * l_.margin < 72 || height - 2 * l_.margin < 72) {
      throw Error(ErrorCode::RenderFailure, "annotation page too small for its margins");
    }
    new_page();
  }

  double usable_width() const { return width_ - 2 * l_.margin; }
  double left() const { return l_.margin; }
  double bottom() const { return l_.margin; }
  double top() const { return height_ - l_.margin; }
  double y() const { return y_; }
  bool at_top() const { return y_ >= top(); }

  void new_page() {
    pages_.push_back({width_, height_, {}, {}});
    y_ = top();
  }

  void text(const std::string& s, FontFace face, double size, double leading) {
    y_ -= leading;
    pages_.back().lines.push_back({s, left(), y_, face, size});
  }

  // Lines of one paragraph; moves to a new page when the block does not
  // fit, and splits it only when it is taller than a page.
  void paragraph(const std::vector<std::string>& lines, FontFace face, double size, double leading) {
    if (y_ - leading * static_cast<double>(lines.size()) < bottom() && !at_top()) new_page();
    for (const auto& line : lines) {
      if (y_ - leading < bottom()) new_page();
      text(line, face, size, leading);
    }
  }

  void skip(double dy) { y_ -= dy; }
  bool room_for(double dy) const { return y_ - dy >= bottom(); }

  void box(double top_y, double bottom_y) {
    pdf::Box b;
    b.rect = {left(), bottom_y, usable_width(), top_y - bottom_y};
    b.line_width = l_.border_width;
    pages_.back().boxes.push_back(b);
  }

  std::vector<pdf::RenderedPage>& pages() { return pages_; }

 private:
  const AnnotationLayout& l_;
  double width_;
  double height_;
  double y_ = 0;
  std::vector<pdf::RenderedPage> pages_;
};

void compose_entry(Composer& c, const AnnotationLayout& l, const bibtex::Entry& entry) {
  const auto blocks = bibtex::serialize_blocks(entry);
  const double inner = c.usable_width() - 2 * (l.padding + l.border_width);

  // Each unit is one field (the header rides with the first field, the
  // closing brace with the last); page breaks fall only between units.
  std::vector<std::vector<std::string>> units;
  double widest = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::vector<std::string> lines = text::split(blocks[i], '\n');
    for (const auto& line : lines) widest = std::max(widest, pdf::text_width(FontFace::Courier, 1, line));
    const bool attach = (i == 1) || (i + 1 == blocks.size() && i > 0);
    if (attach && !units.empty()) units.back().insert(units.back().end(), lines.begin(), lines.end());
    else units.push_back(lines);
  }
  double size = l.body_size;
  if (widest > 0) size = std::clamp(inner / widest, l.min_body_size, l.body_size);
  const double leading = 1.2 * size;
  for (auto& unit : units) {
    std::vector<std::string> wrapped;
    for (const auto& line : unit) {
      for (auto& piece : wrap(line, FontFace::Courier, size, inner)) wrapped.push_back(std::move(piece));
    }
    unit = std::move(wrapped);
  }

  const double pad = l.padding + l.border_width;
  const double descent = 0.3 * size;
  bool open = false;
  double box_top = 0;
  auto close_box = [&] {
    const double box_bottom = c.y() - descent - pad;
    c.box(box_top, box_bottom);
    c.skip(c.y() - box_bottom);
    open = false;
  };
  auto open_box = [&] {
    box_top = c.y();
    c.skip(pad + size - leading);
    open = true;
  };
  auto unit_height = [&](std::size_t n) {
    return (open ? 0 : pad + size - leading) + leading * static_cast<double>(n) + descent + pad;
  };

  for (const auto& unit : units) {
    if (!c.room_for(unit_height(unit.size()))) {
      if (open) close_box();
      if (!c.at_top()) c.new_page();
    }
    for (const auto& line : unit) {
      if (!c.room_for(unit_height(1))) {
        if (!open && c.at_top()) throw Error(ErrorCode::RenderFailure, "BibTeX line does not fit on a page");
        if (open) close_box();
        c.new_page();
      }
      if (!open) open_box();
      c.text(line, FontFace::Courier, size, leading);
    }
  }
  if (open) close_box();
}

}  // namespace

std::string format_related(const related::RelatedPaper& paper) {
  std::vector<std::string> parts;
  for (const std::string& s : {paper.authors, paper.title}) {
    const std::string t = text::normalize_whitespace(s);
    if (!t.empty()) parts.push_back(t);
  }
  if (paper.url && !text::trim(*paper.url).empty()) parts.push_back(text::trim(*paper.url));
  else if (paper.doi && !text::trim(*paper.doi).empty()) parts.push_back("https://doi.org/" + text::trim(*paper.doi));
  if (paper.year) parts.push_back(std::to_string(*paper.year));
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : " ") + p + ".";
  return out;
}

std::vector<pdf::RenderedPage> render_annotation_pages(const AnnotationBundle& bundle, double page_width,
                                                       double page_height) {
  const AnnotationLayout& l = bundle.layout;
  Composer c(l, l.page_width > 0 ? l.page_width : page_width, l.page_height > 0 ? l.page_height : page_height);

  c.text(l.heading, FontFace::HelveticaBold, l.heading_size, l.heading_size);
  c.skip(0.6 * l.heading_size);
  const double text_leading = 1.25 * l.text_size;
  if (bundle.webview_url && !text::trim(*bundle.webview_url).empty()) {
    c.paragraph(wrap("Online version: " + text::trim(*bundle.webview_url), FontFace::Helvetica, l.text_size,
                     c.usable_width()),
                FontFace::Helvetica, l.text_size, text_leading);
    c.skip(0.6 * l.text_size);
  }
  compose_entry(c, l, bundle.entry);

  if (!bundle.related.empty()) {
    const double sub = 0.75 * l.heading_size;
    c.skip(1.2 * l.text_size);
    if (!c.room_for(1.3 * sub + 2 * text_leading)) c.new_page();
    c.text(l.related_heading, FontFace::HelveticaBold, sub, c.at_top() ? sub : 1.3 * sub);
    c.skip(0.4 * l.text_size);
    for (const auto& paper : bundle.related) {
      c.paragraph(wrap(format_related(paper), FontFace::Helvetica, l.text_size, c.usable_width()),
                  FontFace::Helvetica, l.text_size, text_leading);
      c.skip(0.4 * l.text_size);
    }
  }
  return std::move(c.pages());
}

pdf::Rect button_rect(const pdf::PdfDocument& doc, const AnnotationLayout& layout) {
  if (layout.button_rect) return *layout.button_rect;
  const pdf::Rect box = doc.media_box(0);
  return {box.x + box.width - layout.button_inset - layout.button_width,
          box.y + box.height - layout.button_inset - layout.button_height, layout.button_width, layout.button_height};
}

pdf::PdfDocument annotate_pdf(const pdf::PdfDocument& doc, const AnnotationBundle& bundle) {
  if (doc.page_count() == 0) throw Error(ErrorCode::MalformedPdf, "document has no pages");
  const pdf::Rect last = doc.media_box(doc.page_count() - 1);
  const auto pages = render_annotation_pages(bundle, last.width, last.height);
  const std::size_t first_new = doc.page_count();
  const pdf::PdfDocument extended = pdf::append_pages(doc, pages);
  pdf::ButtonStyle style;
  style.label = bundle.layout.button_label;
  style.replace_existing = true;
  const pdf::Rect dest_box = extended.media_box(first_new);
  return pdf::add_link(extended, {0, button_rect(doc, bundle.layout)}, {first_new, dest_box}, style);
}

std::string latex_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\textbackslash{}"; break;
      case '~': out += "\\textasciitilde{}"; break;
      case '^': out += "\\textasciicircum{}"; break;
      case '%': case '#': case '&': case '_': case '{': case '}': case '$':
        out += '\\';
        out += c;
        break;
      default: out += c;
    }
  }
  return out;
}

std::string render_latex(const AnnotationBundle& bundle) {
  std::string out = "\\hypertarget{annotation}{}\n\\citationtitle\n\n";
  if (bundle.webview_url && !text::trim(*bundle.webview_url).empty()) {
    out += "\\onlineversion{" + latex_escape(text::trim(*bundle.webview_url)) + "}\n";
  }
  out += "\\begin{bibtexannotation}\n" + bibtex::serialize(bundle.entry) + "\\end{bibtexannotation}\n";
  if (!bundle.related.empty()) {
    out += "\n\\begin{relatedpapers}\n";
    for (const auto& paper : bundle.related) {
      out += "    \\relatedpaper{" + latex_escape(format_related(paper)) + " }\n";
    }
    out += "\\end{relatedpapers}\n";
  }
  return out;
}

const std::string& latex_style() {
  static const std::string style(k_citeassist_sty);
  return style;
}

}  // namespace citeassist::annotator
