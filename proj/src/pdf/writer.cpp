#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "citeassist/error.hpp"
#include "pdf/document_impl.hpp"
#include "pdf/encoding.hpp"
#include "pdf/filters.hpp"
#include "pdf/standard_fonts.hpp"

namespace citeassist::pdf {

namespace {

constexpr std::string_view k_marker_key = "CiteAssistPart";

// Collects replaced and new objects and appends them to the original bytes
// with a fresh cross-reference section.
class Update {
 public:
  explicit Update(const PdfDocument::Impl& doc) : doc_(doc), next_(doc.next_object_number()) {}

  int allocate() { return next_++; }

  Ref add(Object obj) {
    const int num = allocate();
    objects_[num] = {0, std::move(obj)};
    return Ref{num, 0};
  }

  void replace(int num, Object obj) {
    int gen = 0;
    if (auto it = doc_.xref.find(num); it != doc_.xref.end() && it->second.type == XrefEntry::Type::Offset) {
      gen = it->second.gen;
    }
    objects_[num] = {gen, std::move(obj)};
  }

  std::string finish() {
    std::string out = doc_.bytes;
    if (!out.empty() && out.back() != '\n' && out.back() != '\r') out += '\n';

    std::map<int, XrefEntry> entries;
    if (doc_.reconstructed) {
      for (const auto& [num, e] : doc_.xref) {
        if (e.type != XrefEntry::Type::Free) entries[num] = e;
      }
    }
    for (const auto& [num, item] : objects_) {
      XrefEntry e;
      e.type = XrefEntry::Type::Offset;
      e.offset = out.size();
      e.gen = item.first;
      entries[num] = e;
      out += std::to_string(num) + " " + std::to_string(item.first) + " obj\n";
      out += to_pdf(item.second);
      out += "\nendobj\n";
    }

    Dict trailer;
    for (const char* key : {"Root", "Info", "ID"}) {
      if (const Object* v = doc_.trailer.find(key)) trailer.set(key, *v);
    }
    if (!doc_.reconstructed) trailer.set("Prev", static_cast<std::int64_t>(doc_.last_xref_offset));

    const bool needs_stream =
        doc_.xref_is_stream || std::any_of(entries.begin(), entries.end(), [](const auto& e) {
          return e.second.type == XrefEntry::Type::Compressed;
        });
    std::size_t xref_offset = out.size();
    if (needs_stream) {
      const int self = next_++;
      XrefEntry e;
      e.type = XrefEntry::Type::Offset;
      e.offset = xref_offset;
      entries[self] = e;
      trailer.set("Size", next_);
      write_xref_stream(out, entries, trailer, self);
    } else {
      trailer.set("Size", next_);
      write_xref_table(out, entries, trailer);
    }
    out += "startxref\n" + std::to_string(xref_offset) + "\n%%EOF\n";
    return out;
  }

 private:
  // Contiguous runs of object numbers. Tables always lead with the head of
  // the free list; some readers assume the first subsection starts at 0.
  std::vector<std::pair<int, std::vector<const XrefEntry*>>> sections(const std::map<int, XrefEntry>& entries,
                                                                       bool with_free_head) {
    std::vector<std::pair<int, std::vector<const XrefEntry*>>> out;
    if (with_free_head) out.push_back({0, {&free_head_}});
    for (const auto& [num, e] : entries) {
      if (out.empty() || out.back().first + static_cast<int>(out.back().second.size()) != num) {
        out.push_back({num, {}});
      }
      out.back().second.push_back(&e);
    }
    return out;
  }

  void write_xref_table(std::string& out, const std::map<int, XrefEntry>& entries, const Dict& trailer) {
    out += "xref\n";
    char line[32];
    for (const auto& [start, list] : sections(entries, true)) {
      out += std::to_string(start) + " " + std::to_string(list.size()) + "\n";
      for (const XrefEntry* e : list) {
        if (e->type == XrefEntry::Type::Free) {
          std::snprintf(line, sizeof line, "%010d %05d f\r\n", 0, 65535);
        } else {
          std::snprintf(line, sizeof line, "%010zu %05d n\r\n", e->offset, e->gen);
        }
        out += line;
      }
    }
    out += "trailer\n" + to_pdf(trailer) + "\n";
  }

  void write_xref_stream(std::string& out, const std::map<int, XrefEntry>& entries, Dict trailer, int self) {
    std::size_t max_field = 0;
    for (const auto& [num, e] : entries) max_field = std::max({max_field, e.offset, static_cast<std::size_t>(e.stream)});
    int width = 1;
    while (width < 8 && (max_field >> (8 * width)) != 0) ++width;

    std::string rows;
    auto put = [&rows](std::uint64_t value, int bytes) {
      for (int i = bytes - 1; i >= 0; --i) rows += static_cast<char>((value >> (8 * i)) & 0xFF);
    };
    Array index;
    for (const auto& [start, list] : sections(entries, doc_.reconstructed)) {
      index.emplace_back(start);
      index.emplace_back(static_cast<std::int64_t>(list.size()));
      for (const XrefEntry* e : list) {
        switch (e->type) {
          case XrefEntry::Type::Free:
            put(0, 1), put(0, width), put(65535, 2);
            break;
          case XrefEntry::Type::Offset:
            put(1, 1), put(e->offset, width), put(static_cast<std::uint64_t>(e->gen), 2);
            break;
          case XrefEntry::Type::Compressed:
            put(2, 1), put(static_cast<std::uint64_t>(e->stream), width), put(static_cast<std::uint64_t>(e->index), 2);
            break;
        }
      }
    }
    Stream s;
    s.dict.set("Type", Name{"XRef"});
    for (const auto& [k, v] : trailer) s.dict.set(k, v);
    s.dict.set("W", Array{Object(1), Object(width), Object(2)});
    s.dict.set("Index", std::move(index));
    s.dict.set("Filter", Name{"FlateDecode"});
    s.data = flate_encode(rows);
    out += std::to_string(self) + " 0 obj\n" + to_pdf(Object(std::move(s))) + "\nendobj\n";
  }

  const PdfDocument::Impl& doc_;
  int next_;
  std::map<int, std::pair<int, Object>> objects_;
  XrefEntry free_head_{};
};

std::string pdf_string(std::string_view bytes) {
  std::string out = "(";
  for (unsigned char c : bytes) {
    if (c == '(' || c == ')' || c == '\\') {
      out += '\\';
      out += static_cast<char>(c);
    } else if (c < 32 || c > 126) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\%03o", c);
      out += buf;
    } else {
      out += static_cast<char>(c);
    }
  }
  out += ')';
  return out;
}

const char* base_font_name(FontFace face) {
  switch (face) {
    case FontFace::Courier: return "Courier";
    case FontFace::Helvetica: return "Helvetica";
    case FontFace::HelveticaBold: return "Helvetica-Bold";
  }
  return "Helvetica";
}

const char* resource_name(FontFace face) {
  switch (face) {
    case FontFace::Courier: return "CAC";
    case FontFace::Helvetica: return "CAH";
    case FontFace::HelveticaBold: return "CAHB";
  }
  return "CAH";
}

Object font_dict(FontFace face) {
  Dict d;
  d.set("Type", Name{"Font"});
  d.set("Subtype", Name{"Type1"});
  d.set("BaseFont", Name{base_font_name(face)});
  d.set("Encoding", Name{"WinAnsiEncoding"});
  return d;
}

Array rect_array(const Rect& r) {
  return Array{Object(r.x), Object(r.y), Object(r.x + r.width), Object(r.y + r.height)};
}

Object content_stream(const std::string& ops, Dict dict = {}) {
  Stream s;
  s.dict = std::move(dict);
  s.dict.set("Filter", Name{"FlateDecode"});
  try {
    s.data = flate_encode(ops);
  } catch (const Error& e) {
    throw Error(ErrorCode::RenderFailure, std::string("cannot encode page content: ") + e.what());
  }
  return s;
}

std::string n(double v) { return format_real(v); }

std::string box_ops(const Box& b) {
  std::string ops = "q " + n(b.line_width) + " w 0 G ";
  const std::string re = n(b.rect.x) + " " + n(b.rect.y) + " " + n(b.rect.width) + " " + n(b.rect.height) + " re ";
  if (b.fill_gray) {
    ops += n(*b.fill_gray) + " g " + re + (b.line_width > 0 ? "B" : "f");
  } else {
    ops += re + "S";
  }
  return ops + " Q\n";
}

std::string line_ops(const TextLine& l) {
  return "BT 0 g /" + std::string(resource_name(l.font)) + " " + n(l.size) + " Tf " + n(l.x) + " " + n(l.y) +
         " Td " + pdf_string(encode_winansi(l.text)) + " Tj ET\n";
}

const PageNode& page_node(const PdfDocument::Impl& impl, std::size_t index) {
  if (index >= impl.page_nodes.size()) {
    throw Error(ErrorCode::PageOutOfRange, "page " + std::to_string(index) + " out of range (document has " +
                                               std::to_string(impl.page_nodes.size()) + " pages)");
  }
  return impl.page_nodes[index];
}

std::vector<Object> resolved_array(const PdfDocument::Impl& impl, const Object* obj) {
  if (obj == nullptr) return {};
  Object r = impl.resolve(*obj);
  if (const Array* a = r.as_array()) return *a;
  if (obj->as_ref()) return {*obj};
  return {};
}

}  // namespace

double text_width(FontFace face, double size, std::string_view utf8) {
  const auto* widths = standard_font_widths(base_font_name(face));
  double total = 0;
  for (unsigned char c : encode_winansi(utf8)) total += (*widths)[c];
  return total * size / 1000.0;
}

bool RenderedPage::operator==(const RenderedPage& o) const {
  auto box_eq = [](const Box& a, const Box& b) {
    return a.rect == b.rect && a.line_width == b.line_width && a.fill_gray == b.fill_gray;
  };
  auto line_eq = [](const TextLine& a, const TextLine& b) {
    return a.text == b.text && a.x == b.x && a.y == b.y && a.font == b.font && a.size == b.size;
  };
  return width == o.width && height == o.height &&
         std::equal(boxes.begin(), boxes.end(), o.boxes.begin(), o.boxes.end(), box_eq) &&
         std::equal(lines.begin(), lines.end(), o.lines.begin(), o.lines.end(), line_eq);
}

PdfDocument append_pages(const PdfDocument& doc, std::span<const RenderedPage> new_pages) {
  if (new_pages.empty()) throw std::invalid_argument("append_pages: no pages given");
  const PdfDocument::Impl& impl = doc.impl();
  Update update(impl);

  Dict fonts;
  for (FontFace face : {FontFace::Courier, FontFace::Helvetica, FontFace::HelveticaBold}) {
    fonts.set(resource_name(face), update.add(font_dict(face)));
  }
  Dict resources;
  resources.set("Font", fonts);
  resources.set("ProcSet", Array{Object(Name{"PDF"}), Object(Name{"Text"})});

  const Rect last = impl.page_nodes.back().media_box;
  Object root_obj = impl.get(impl.pages_root.num);
  Dict root = root_obj.as_dict() ? *root_obj.as_dict() : Dict{};
  std::vector<Object> kids = resolved_array(impl, root.find("Kids"));
  std::int64_t count = root.find("Count") ? impl.resolve(*root.find("Count")).as_int().value_or(0) : 0;

  for (const RenderedPage& p : new_pages) {
    std::string ops;
    for (const Box& b : p.boxes) ops += box_ops(b);
    for (const TextLine& l : p.lines) ops += line_ops(l);
    const Ref contents = update.add(content_stream(ops));
    Dict page;
    page.set("Type", Name{"Page"});
    page.set("Parent", impl.pages_root);
    const double w = p.width > 0 ? p.width : last.width;
    const double h = p.height > 0 ? p.height : last.height;
    page.set("MediaBox", rect_array(Rect{0, 0, w, h}));
    page.set("Resources", resources);
    page.set("Contents", contents);
    kids.emplace_back(update.add(std::move(page)));
    ++count;
  }

  root.set("Kids", Array(std::move(kids)));
  root.set("Count", count);
  update.replace(impl.pages_root.num, std::move(root));
  return parse_pdf(update.finish());
}

PdfDocument add_link(const PdfDocument& doc, const LinkTarget& source, const LinkTarget& destination,
                     const ButtonStyle& style) {
  const PdfDocument::Impl& impl = doc.impl();
  const PageNode& src = page_node(impl, source.page_index);
  const PageNode& dst = page_node(impl, destination.page_index);
  Update update(impl);
  Dict page = src.dict;

  // Annotations
  std::vector<Object> annots;
  for (const Object& a : resolved_array(impl, page.find("Annots"))) {
    if (style.replace_existing) {
      Dict ad = impl.resolve_dict(a);
      const Object* nm = ad.find("NM");
      if (nm && nm->as_string() && nm->as_string()->bytes == style.annotation_name) continue;
    }
    annots.push_back(a);
  }
  Dict annot;
  annot.set("Type", Name{"Annot"});
  annot.set("Subtype", Name{"Link"});
  annot.set("Rect", rect_array(source.rectangle));
  annot.set("Border", Array{Object(0), Object(0), Object(0)});
  annot.set("F", 4);
  annot.set("NM", String{style.annotation_name, false});
  annot.set("Dest", Array{Object(dst.ref), Object(Name{"Fit"})});
  annots.emplace_back(update.add(std::move(annot)));
  page.set("Annots", Array(std::move(annots)));

  // Contents, wrapped so the button is drawn in default user space
  // Earlier wrappers are dropped and rebuilt; earlier buttons stay unless
  // they carry the name being replaced.
  std::vector<Object> originals;
  std::vector<Object> buttons;
  for (const Object& c : resolved_array(impl, page.find("Contents"))) {
    Object s = impl.resolve(c);
    const Stream* st = s.as_stream();
    const Object* part = st ? st->dict.find(k_marker_key) : nullptr;
    if (part == nullptr) {
      originals.push_back(c);
    } else if (part->is_name("Button")) {
      const Object* nm = st->dict.find("CiteAssistName");
      const bool same = nm && nm->as_string() && nm->as_string()->bytes == style.annotation_name;
      if (!(style.replace_existing && same)) buttons.push_back(c);
    }
  }
  auto marked = [&](const std::string& ops, const char* part) {
    Dict d;
    d.set(std::string(k_marker_key), Name{part});
    if (std::string_view(part) == "Button") d.set("CiteAssistName", String{style.annotation_name, false});
    return update.add(content_stream(ops, std::move(d)));
  };

  std::string font_key = "CABtn";
  Dict resources = src.resources;
  Dict fonts = resources.find("Font") ? impl.resolve_dict(*resources.find("Font")) : Dict{};
  for (int i = 1; fonts.contains(font_key) && !style.replace_existing; ++i) font_key = "CABtn" + std::to_string(i);
  fonts.set(font_key, update.add(font_dict(FontFace::Helvetica)));
  resources.set("Font", std::move(fonts));
  page.set("Resources", std::move(resources));

  const Rect& r = source.rectangle;
  const double label_w = text_width(FontFace::Helvetica, style.font_size, style.label);
  const double tx = r.x + (r.width - label_w) / 2;
  const double ty = r.y + (r.height - style.font_size * 0.7) / 2;
  std::string button = box_ops(Box{r, style.border_width, style.fill_gray});
  button += "BT 0 g /" + font_key + " " + n(style.font_size) + " Tf " + n(tx) + " " + n(ty) + " Td " +
            pdf_string(encode_winansi(style.label)) + " Tj ET\n";

  Array contents;
  if (!originals.empty()) {
    contents.emplace_back(marked("q\n", "Save"));
    for (Object& o : originals) contents.push_back(std::move(o));
    contents.emplace_back(marked("\nQ\n", "Restore"));
  }
  for (Object& o : buttons) contents.push_back(std::move(o));
  contents.emplace_back(marked(button, "Button"));
  page.set("Contents", std::move(contents));

  update.replace(src.ref.num, std::move(page));
  return parse_pdf(update.finish());
}

}  // namespace citeassist::pdf
