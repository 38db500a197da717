#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>

#include "citeassist/error.hpp"
#include "citeassist/text_util.hpp"
#include "pdf/document_impl.hpp"
#include "pdf/encoding.hpp"
#include "pdf/parser.hpp"
#include "pdf/standard_fonts.hpp"

namespace citeassist::pdf {

namespace {

struct Matrix {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

  // this applied first, then rhs
  Matrix then(const Matrix& m) const {
    return {a * m.a + b * m.c,       a * m.b + b * m.d,       c * m.a + d * m.c,
            c * m.b + d * m.d,       e * m.a + f * m.c + m.e, e * m.b + f * m.d + m.f};
  }
  static Matrix translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
};

std::optional<Matrix> matrix_from(const std::vector<Object>& ops, std::size_t first = 0) {
  if (ops.size() < first + 6) return std::nullopt;
  double v[6];
  for (std::size_t i = 0; i < 6; ++i) {
    auto r = ops[first + i].as_real();
    if (!r) return std::nullopt;
    v[i] = *r;
  }
  return Matrix{v[0], v[1], v[2], v[3], v[4], v[5]};
}

// ---------------------------------------------------------------------------
// Fonts

struct Font {
  int code_bytes = 1;
  bool has_to_unicode = false;
  std::unordered_map<std::uint32_t, std::string> to_unicode;
  std::array<std::string, 256> simple_map;  // code -> UTF-8 from the encoding
  std::array<double, 256> widths{};         // glyph space units (1/1000 em)
  bool has_widths = false;
  std::unordered_map<std::uint32_t, double> cid_widths;
  double default_width = 500;
  double glyph_scale = 0.001;  // FontMatrix scale for Type 3 fonts

  std::string decode(std::uint32_t code) const {
    if (has_to_unicode) {
      if (auto it = to_unicode.find(code); it != to_unicode.end()) return it->second;
    }
    if (code_bytes == 1 && code < 256) return simple_map[code];
    return {};
  }

  double width(std::uint32_t code) const {
    if (code_bytes == 2) {
      auto it = cid_widths.find(code);
      return it != cid_widths.end() ? it->second : default_width;
    }
    if (code < 256 && has_widths && widths[code] > 0) return widths[code];
    return default_width;
  }
};

std::string utf16be_to_utf8(std::string_view bytes) {
  std::string prefixed = "\xFE\xFF";
  prefixed += bytes;
  std::string out = decode_text_string(prefixed);
  std::string expanded;
  for (char32_t cp : text::decode_utf8(out)) append_text(expanded, cp);
  return expanded;
}

std::uint32_t bytes_to_code(std::string_view s) {
  std::uint32_t v = 0;
  for (unsigned char c : s) v = (v << 8) | c;
  return v;
}

void parse_to_unicode(std::string_view cmap, Font& font) {
  Lexer lex(cmap);
  std::vector<Token> pending;
  enum class Mode { None, Char, Range, Codespace } mode = Mode::None;
  int codespace_bytes = 0;  // informational; composite fonts are always read two bytes at a time
  while (true) {
    Token t;
    try {
      t = lex.next();
    } catch (const Error&) {
      break;
    }
    if (t.kind == Token::Kind::End) break;
    if (t.kind == Token::Kind::Keyword) {
      if (t.text == "beginbfchar") mode = Mode::Char;
      else if (t.text == "beginbfrange") mode = Mode::Range;
      else if (t.text == "begincodespacerange") mode = Mode::Codespace;
      else if (t.text == "endbfchar" || t.text == "endbfrange" || t.text == "endcodespacerange") mode = Mode::None;
      pending.clear();
      continue;
    }
    if (mode == Mode::Codespace && t.kind == Token::Kind::String) {
      codespace_bytes = std::max(codespace_bytes, static_cast<int>(t.text.size()));
      continue;
    }
    if (mode == Mode::Char) {
      pending.push_back(std::move(t));
      if (pending.size() == 2) {
        if (pending[0].kind == Token::Kind::String && pending[1].kind == Token::Kind::String) {
          font.to_unicode[bytes_to_code(pending[0].text)] = utf16be_to_utf8(pending[1].text);
        } else if (pending[0].kind == Token::Kind::String && pending[1].kind == Token::Kind::Name) {
          if (auto cp = glyph_to_unicode(pending[1].text)) {
            std::string s;
            append_text(s, *cp);
            font.to_unicode[bytes_to_code(pending[0].text)] = s;
          }
        }
        pending.clear();
      }
    } else if (mode == Mode::Range) {
      if (t.kind == Token::Kind::ArrayOpen) {
        // <lo> <hi> [<d0> <d1> ...]
        std::vector<std::string> dsts;
        while (true) {
          Token e = lex.next();
          if (e.kind == Token::Kind::ArrayClose || e.kind == Token::Kind::End) break;
          if (e.kind == Token::Kind::String) dsts.push_back(e.text);
        }
        if (pending.size() == 2) {
          const auto lo = bytes_to_code(pending[0].text);
          const auto hi = bytes_to_code(pending[1].text);
          for (std::uint32_t c = lo; c <= hi && c - lo < dsts.size(); ++c) {
            font.to_unicode[c] = utf16be_to_utf8(dsts[c - lo]);
          }
        }
        pending.clear();
        continue;
      }
      pending.push_back(std::move(t));
      if (pending.size() == 3) {
        if (pending[0].kind == Token::Kind::String && pending[1].kind == Token::Kind::String &&
            pending[2].kind == Token::Kind::String && !pending[2].text.empty()) {
          const auto lo = bytes_to_code(pending[0].text);
          const auto hi = bytes_to_code(pending[1].text);
          std::string dst = pending[2].text;
          for (std::uint32_t c = lo; c <= hi && c - lo < 65536; ++c) {
            font.to_unicode[c] = utf16be_to_utf8(dst);
            // increment the last byte of the destination
            std::size_t k = dst.size();
            while (k > 0) {
              --k;
              if (static_cast<unsigned char>(dst[k]) != 0xFF) {
                dst[k] = static_cast<char>(static_cast<unsigned char>(dst[k]) + 1);
                break;
              }
              dst[k] = 0;
            }
          }
        }
        pending.clear();
      }
    }
  }
  font.has_to_unicode = !font.to_unicode.empty();
}

std::string strip_subset_prefix(std::string_view name) {
  if (name.size() > 7 && name[6] == '+' &&
      std::all_of(name.begin(), name.begin() + 6, [](char c) { return c >= 'A' && c <= 'Z'; })) {
    name.remove_prefix(7);
  }
  return std::string(name);
}

Font load_font(const PdfDocument::Impl& doc, const Dict& fd) {
  Font font;
  const Object* subtype_obj = fd.find("Subtype");
  const std::string subtype = subtype_obj && subtype_obj->as_name() ? subtype_obj->as_name()->value : "Type1";
  const std::string base = fd.find("BaseFont") && doc.resolve(*fd.find("BaseFont")).as_name()
                               ? strip_subset_prefix(doc.resolve(*fd.find("BaseFont")).as_name()->value)
                               : std::string{};

  if (subtype == "Type0") {
    font.code_bytes = 2;
    font.default_width = 1000;
    if (const Object* desc = fd.find("DescendantFonts")) {
      Object arr = doc.resolve(*desc);
      if (arr.as_array() && !arr.as_array()->empty()) {
        Dict cid = doc.resolve_dict((*arr.as_array())[0]);
        if (const Object* dw = cid.find("DW")) font.default_width = doc.resolve(*dw).as_real().value_or(1000);
        if (const Object* w = cid.find("W")) {
          Object wa = doc.resolve(*w);
          if (const Array* a = wa.as_array()) {
            std::size_t i = 0;
            while (i < a->size()) {
              auto first = doc.resolve((*a)[i]).as_int();
              if (!first || i + 1 >= a->size()) break;
              Object next = doc.resolve((*a)[i + 1]);
              if (const Array* list = next.as_array()) {
                for (std::size_t k = 0; k < list->size(); ++k) {
                  font.cid_widths[static_cast<std::uint32_t>(*first + static_cast<std::int64_t>(k))] =
                      doc.resolve((*list)[k]).as_real().value_or(font.default_width);
                }
                i += 2;
              } else if (i + 2 < a->size()) {
                auto last = next.as_int();
                auto width = doc.resolve((*a)[i + 2]).as_real();
                if (last && width && *last - *first < 65536) {
                  for (auto c = *first; c <= *last; ++c) font.cid_widths[static_cast<std::uint32_t>(c)] = *width;
                }
                i += 3;
              } else {
                break;
              }
            }
          }
        }
      }
    }
  } else {
    // Simple font: base encoding, then Differences.
    std::string base_enc;
    const Array* differences = nullptr;
    Object enc_obj;
    if (const Object* enc = fd.find("Encoding")) {
      enc_obj = doc.resolve(*enc);
      if (const Name* n = enc_obj.as_name()) {
        base_enc = n->value;
      } else if (const Dict* d = enc_obj.as_dict()) {
        if (const Object* be = d->find("BaseEncoding"); be && be->as_name()) base_enc = be->as_name()->value;
        if (const Object* diffs = d->find("Differences")) differences = diffs->as_array();
      }
    }
    if (base_enc.empty()) {
      if (base == "Symbol") base_enc = "Symbol";
      else if (subtype == "TrueType") base_enc = "WinAnsiEncoding";
      else base_enc = "StandardEncoding";
    }
    const CodeMap& map = base_encoding(base_enc);
    for (std::size_t c = 0; c < 256; ++c) {
      if (map[c] != 0) append_text(font.simple_map[c], map[c]);
    }
    if (differences != nullptr) {
      std::int64_t code = 0;
      for (const Object& item : *differences) {
        if (auto n = item.as_int()) {
          code = *n;
        } else if (const Name* g = item.as_name()) {
          if (code >= 0 && code < 256) {
            std::string s;
            if (auto cp = glyph_to_unicode(g->value)) append_text(s, *cp);
            font.simple_map[static_cast<std::size_t>(code)] = s;
          }
          ++code;
        }
      }
    }
    for (std::size_t c = 0; c < 256; ++c) {
      if (!font.simple_map[c].empty() && font.simple_map[c][0] == '\0') font.simple_map[c].clear();
    }

    if (const Object* w = fd.find("Widths")) {
      Object wa = doc.resolve(*w);
      const auto first = fd.find("FirstChar") ? doc.resolve(*fd.find("FirstChar")).as_int().value_or(0) : 0;
      if (const Array* a = wa.as_array()) {
        for (std::size_t i = 0; i < a->size(); ++i) {
          const auto code = first + static_cast<std::int64_t>(i);
          if (code >= 0 && code < 256) {
            font.widths[static_cast<std::size_t>(code)] = doc.resolve((*a)[i]).as_real().value_or(0);
          }
        }
        font.has_widths = true;
      }
    }
    if (!font.has_widths) {
      if (const auto* metrics = standard_font_widths(base)) {
        for (std::size_t c = 0; c < 256; ++c) font.widths[c] = (*metrics)[c];
        font.has_widths = true;
      }
    }
    if (const Object* desc = fd.find("FontDescriptor")) {
      Dict d = doc.resolve_dict(*desc);
      if (const Object* mw = d.find("MissingWidth")) {
        if (auto v = doc.resolve(*mw).as_real(); v && *v > 0) font.default_width = *v;
      }
    }
    if (subtype == "Type3") {
      if (const Object* fm = fd.find("FontMatrix")) {
        Object m = doc.resolve(*fm);
        if (m.as_array() && !m.as_array()->empty()) {
          font.glyph_scale = m.as_array()->front().as_real().value_or(0.001);
        }
      }
    }
  }

  if (const Object* tu = fd.find("ToUnicode")) {
    Object s = doc.resolve(*tu);
    if (const Stream* st = s.as_stream()) {
      try {
        parse_to_unicode(doc.decode_stream(*st), font);
      } catch (const Error&) {
      }
    }
  }
  return font;
}

// ---------------------------------------------------------------------------
// Interpretation

struct Chunk {
  std::string text;
  double x = 0, y = 0;  // device space start
  double end_x = 0;
  double size = 0;
};

struct TextState {
  const Font* font = nullptr;
  double size = 0;
  double char_space = 0;
  double word_space = 0;
  double hscale = 1;
  double leading = 0;
  double rise = 0;
};

struct GraphicsState {
  Matrix ctm;
  TextState text;
};

class Interpreter {
 public:
  Interpreter(const PdfDocument::Impl& doc, std::vector<Chunk>& out) : doc_(doc), out_(out) {}

  void run(std::string_view content, const Dict& resources, const Matrix& base, int depth) {
    if (depth > 8) return;
    std::vector<GraphicsState> stack;
    GraphicsState gs;
    gs.ctm = base;
    Matrix tm, tlm;
    for (const ContentOp& op : parse_content(content)) {
      const std::string& o = op.op;
      const auto& a = op.operands;
      auto num = [&](std::size_t i) { return i < a.size() ? a[i].as_real().value_or(0) : 0.0; };
      if (o == "q") {
        stack.push_back(gs);
      } else if (o == "Q") {
        if (!stack.empty()) {
          gs = stack.back();
          stack.pop_back();
        }
      } else if (o == "cm") {
        if (auto m = matrix_from(a)) gs.ctm = m->then(gs.ctm);
      } else if (o == "BT") {
        tm = tlm = Matrix{};
      } else if (o == "Tf") {
        if (a.size() >= 2 && a[0].as_name()) {
          gs.text.font = font_for(resources, a[0].as_name()->value);
          gs.text.size = num(1);
        }
      } else if (o == "Tc") {
        gs.text.char_space = num(0);
      } else if (o == "Tw") {
        gs.text.word_space = num(0);
      } else if (o == "Tz") {
        gs.text.hscale = num(0) / 100.0;
      } else if (o == "TL") {
        gs.text.leading = num(0);
      } else if (o == "Ts") {
        gs.text.rise = num(0);
      } else if (o == "Td") {
        tlm = Matrix::translate(num(0), num(1)).then(tlm);
        tm = tlm;
      } else if (o == "TD") {
        gs.text.leading = -num(1);
        tlm = Matrix::translate(num(0), num(1)).then(tlm);
        tm = tlm;
      } else if (o == "Tm") {
        if (auto m = matrix_from(a)) tm = tlm = *m;
      } else if (o == "T*") {
        tlm = Matrix::translate(0, -gs.text.leading).then(tlm);
        tm = tlm;
      } else if (o == "Tj") {
        if (!a.empty() && a[0].as_string()) show(a[0].as_string()->bytes, gs, tm);
      } else if (o == "'") {
        tlm = Matrix::translate(0, -gs.text.leading).then(tlm);
        tm = tlm;
        if (!a.empty() && a[0].as_string()) show(a[0].as_string()->bytes, gs, tm);
      } else if (o == "\"") {
        gs.text.word_space = num(0);
        gs.text.char_space = num(1);
        tlm = Matrix::translate(0, -gs.text.leading).then(tlm);
        tm = tlm;
        if (a.size() >= 3 && a[2].as_string()) show(a[2].as_string()->bytes, gs, tm);
      } else if (o == "TJ") {
        if (!a.empty() && a[0].as_array()) {
          for (const Object& item : *a[0].as_array()) {
            if (const String* s = item.as_string()) {
              show(s->bytes, gs, tm);
            } else if (auto adj = item.as_real()) {
              tm = Matrix::translate(-*adj / 1000.0 * gs.text.size * gs.text.hscale, 0).then(tm);
            }
          }
        }
      } else if (o == "Do") {
        if (!a.empty() && a[0].as_name()) do_xobject(resources, a[0].as_name()->value, gs.ctm, depth);
      }
    }
  }

 private:
  const Font* font_for(const Dict& resources, const std::string& name) {
    const Object* fonts_obj = resources.find("Font");
    if (fonts_obj == nullptr) return nullptr;
    Dict fonts = doc_.resolve_dict(*fonts_obj);
    const Object* f = fonts.find(name);
    if (f == nullptr) return nullptr;
    std::string key = f->as_ref() ? "#" + std::to_string(f->as_ref()->num) : name + "@" + std::to_string(
                                                                                            reinterpret_cast<std::uintptr_t>(&resources));
    auto it = fonts_.find(key);
    if (it == fonts_.end()) it = fonts_.emplace(key, load_font(doc_, doc_.resolve_dict(*f))).first;
    return &it->second;
  }

  void do_xobject(const Dict& resources, const std::string& name, const Matrix& ctm, int depth) {
    const Object* xobjs = resources.find("XObject");
    if (xobjs == nullptr) return;
    Dict dict = doc_.resolve_dict(*xobjs);
    const Object* ref = dict.find(name);
    if (ref == nullptr) return;
    Object x = doc_.resolve(*ref);
    const Stream* s = x.as_stream();
    if (s == nullptr || !s->dict.find("Subtype") || !s->dict.find("Subtype")->is_name("Form")) return;
    Matrix m;
    if (const Object* mo = s->dict.find("Matrix")) {
      Object mv = doc_.resolve(*mo);
      if (const Array* arr = mv.as_array()) {
        if (auto parsed = matrix_from(*arr)) m = *parsed;
      }
    }
    Dict form_res = s->dict.find("Resources") ? doc_.resolve_dict(*s->dict.find("Resources")) : resources;
    std::string content;
    try {
      content = doc_.decode_stream(*s);
    } catch (const Error&) {
      return;
    }
    owned_resources_.push_back(std::make_unique<Dict>(std::move(form_res)));
    run(content, *owned_resources_.back(), m.then(ctm), depth + 1);
  }

  void show(const std::string& bytes, const GraphicsState& gs, Matrix& tm) {
    const TextState& ts = gs.text;
    if (ts.font == nullptr) return;
    const Font& font = *ts.font;
    const Matrix start = tm.then(gs.ctm);
    Chunk chunk;
    // vertical extent of text space in device space
    const double scale = std::sqrt(start.c * start.c + start.d * start.d);
    chunk.size = std::abs(ts.size) * scale;
    const Matrix rise_start = Matrix::translate(0, ts.rise).then(start);
    chunk.x = rise_start.e;
    chunk.y = rise_start.f;
    const std::size_t step = static_cast<std::size_t>(font.code_bytes);
    for (std::size_t i = 0; i + step <= bytes.size(); i += step) {
      const std::uint32_t code = bytes_to_code(std::string_view(bytes).substr(i, step));
      chunk.text += font.decode(code);
      const double w0 = font.width(code) * font.glyph_scale;
      double tx = w0 * ts.size + ts.char_space;
      if (step == 1 && code == 32) tx += ts.word_space;
      tm = Matrix::translate(tx * ts.hscale, 0).then(tm);
    }
    chunk.end_x = tm.then(gs.ctm).e;
    if (!chunk.text.empty()) out_.push_back(std::move(chunk));
  }

  const PdfDocument::Impl& doc_;
  std::vector<Chunk>& out_;
  std::map<std::string, Font> fonts_;
  std::vector<std::unique_ptr<Dict>> owned_resources_;
};

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

std::vector<TextRun> build_runs(const std::vector<Chunk>& chunks, const Rect& box) {
  struct Building {
    TextRun run;
    double device_y;
    double end_x;
  };
  std::vector<Building> runs;
  for (const Chunk& c : chunks) {
    if (c.size <= 0) continue;
    bool merged = false;
    if (!runs.empty()) {
      Building& cur = runs.back();
      const double size = std::max(cur.run.font_size, c.size);
      const double gap = c.x - cur.end_x;
      const bool same_line = std::abs(c.y - cur.device_y) <= 0.3 * size;
      const bool same_size = std::abs(c.size - cur.run.font_size) <= 0.5;
      if (same_line && same_size && gap >= -0.5 * size && gap <= 2.0 * size) {
        const bool has_space = (!cur.run.text.empty() && cur.run.text.back() == ' ') || c.text.front() == ' ';
        if (gap > 0.15 * size && !has_space) cur.run.text += ' ';
        cur.run.text += c.text;
        cur.end_x = std::max(cur.end_x, c.end_x);
        merged = true;
      }
    }
    if (!merged) {
      Building b;
      b.run.text = c.text;
      b.run.font_size = c.size;
      b.run.x = c.x - box.x;
      b.run.y = (box.y + box.height) - c.y;
      b.device_y = c.y;
      b.end_x = c.end_x;
      runs.push_back(std::move(b));
    }
  }

  std::vector<TextRun> out;
  for (auto& b : runs) {
    if (!is_blank(b.run.text)) out.push_back(std::move(b.run));
  }
  // Reading order: descending PDF y (ascending top-down y), then x. Runs
  // whose baselines nearly coincide are treated as one line.
  std::stable_sort(out.begin(), out.end(), [](const TextRun& l, const TextRun& r) { return l.y < r.y; });
  std::vector<int> line(out.size(), 0);
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double tol = 0.3 * std::min(out[i].font_size, out[i - 1].font_size);
    line[i] = line[i - 1] + (out[i].y - out[i - 1].y > tol ? 1 : 0);
  }
  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    if (line[l] != line[r]) return line[l] < line[r];
    return out[l].x < out[r].x;
  });
  std::vector<TextRun> sorted;
  sorted.reserve(out.size());
  for (std::size_t i : order) sorted.push_back(std::move(out[i]));
  return sorted;
}

}  // namespace

PageContent extract_page_content(const PdfDocument::Impl& doc, const PageNode& page, std::size_t index) {
  PageContent content;
  content.page_index = index;
  std::string data;
  if (const Object* contents = page.dict.find("Contents")) {
    Object c = doc.resolve(*contents);
    auto append = [&](const Object& o) {
      Object s = doc.resolve(o);
      if (const Stream* st = s.as_stream()) {
        data += doc.decode_stream(*st);
        data += '\n';
      }
    };
    if (const Array* arr = c.as_array()) {
      for (const Object& part : *arr) append(part);
    } else {
      append(c);
    }
  }
  std::vector<Chunk> chunks;
  Interpreter(doc, chunks).run(data, page.resources, Matrix{}, 0);
  content.text_runs = build_runs(chunks, page.media_box);
  return content;
}

}  // namespace citeassist::pdf
