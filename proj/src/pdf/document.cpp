#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "citeassist/error.hpp"
#include "citeassist/text_util.hpp"
#include "pdf/document_impl.hpp"
#include "pdf/encoding.hpp"
#include "pdf/filters.hpp"
#include "pdf/parser.hpp"

namespace citeassist::pdf {

namespace {

constexpr std::size_t k_max_pages = 100000;
constexpr int k_max_resolve_depth = 64;

thread_local int t_resolve_depth = 0;

struct DepthGuard {
  DepthGuard() {
    if (++t_resolve_depth > k_max_resolve_depth) {
      --t_resolve_depth;
      throw Error(ErrorCode::MalformedPdf, "reference chain too deep");
    }
  }
  ~DepthGuard() { --t_resolve_depth; }
  DepthGuard(const DepthGuard&) = delete;
  DepthGuard& operator=(const DepthGuard&) = delete;
};

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedPdf, what); }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::optional<int> two_digits(std::string_view s, std::size_t pos) {
  if (pos + 2 > s.size() || !is_digit(s[pos]) || !is_digit(s[pos + 1])) return std::nullopt;
  return (s[pos] - '0') * 10 + (s[pos + 1] - '0');
}

std::optional<CalendarDate> parse_pdf_date(std::string_view s) {
  std::string t = text::trim(s);
  std::string_view v = t;
  if (v.substr(0, 2) == "D:") v.remove_prefix(2);
  if (v.size() < 4 || !std::all_of(v.begin(), v.begin() + 4, is_digit)) return std::nullopt;
  CalendarDate date;
  date.year = std::stoi(std::string(v.substr(0, 4)));
  if (auto m = two_digits(v, 4)) date.month = *m;
  if (auto d = two_digits(v, 6)) date.day = *d;
  if (date.year < 1000 || date.month < 1 || date.month > 12 || date.day < 1 || date.day > 31) return std::nullopt;
  return date;
}

std::optional<std::string> info_text(const PdfDocument::Impl& doc, const Dict& info, std::string_view key) {
  const Object* o = info.find(key);
  if (o == nullptr) return std::nullopt;
  Object v = doc.resolve(*o);
  const String* s = v.as_string();
  if (s == nullptr) return std::nullopt;
  std::string decoded = text::normalize_whitespace(decode_text_string(s->bytes));
  if (decoded.empty()) return std::nullopt;
  return decoded;
}

}  // namespace

bool Rect::contains(const Rect& inner, double tolerance) const {
  return inner.x >= x - tolerance && inner.y >= y - tolerance &&
         inner.x + inner.width <= x + width + tolerance && inner.y + inner.height <= y + height + tolerance;
}

std::optional<Rect> rect_from(const PdfDocument::Impl& doc, const Object& obj) {
  Object resolved = doc.resolve(obj);
  const Array* a = resolved.as_array();
  if (a == nullptr || a->size() != 4) return std::nullopt;
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    auto r = doc.resolve((*a)[i]).as_real();
    if (!r) return std::nullopt;
    v[i] = *r;
  }
  Rect rect{std::min(v[0], v[2]), std::min(v[1], v[3]), std::abs(v[2] - v[0]), std::abs(v[3] - v[1])};
  if (rect.width <= 0 || rect.height <= 0) return std::nullopt;
  return rect;
}

// ---------------------------------------------------------------------------
// Object access

Object PdfDocument::Impl::resolve(const Object& obj) const {
  if (const Ref* r = obj.as_ref()) {
    DepthGuard guard;
    return get(r->num);
  }
  return obj;
}

Dict PdfDocument::Impl::resolve_dict(const Object& obj) const {
  Object v = resolve(obj);
  if (const Dict* d = v.as_dict()) return *d;
  if (const Stream* s = v.as_stream()) return s->dict;
  return {};
}

int PdfDocument::Impl::next_object_number() const {
  int next = 1;
  if (const Object* size = trailer.find("Size")) next = static_cast<int>(size->as_int().value_or(1));
  if (!xref.empty()) next = std::max(next, xref.rbegin()->first + 1);
  return next;
}

Object PdfDocument::Impl::get(int num) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(num); it != cache_.end()) return *it->second;
  }
  Object result;
  auto it = xref.find(num);
  if (it != xref.end()) {
    const XrefEntry& e = it->second;
    if (e.type == XrefEntry::Type::Offset) {
      try {
        result = parse_indirect_at(e.offset, num);
      } catch (const Error&) {
        // Offset drifted (common after sloppy edits); fall back to a scan.
        auto scanned = scan_offsets();
        auto s = scanned.find(num);
        if (s == scanned.end() || s->second == e.offset) throw;
        result = parse_indirect_at(s->second, num);
      }
    } else if (e.type == XrefEntry::Type::Compressed) {
      auto stm = load_objstm(e.stream);
      auto pos = std::find_if(stm->entries.begin(), stm->entries.end(),
                              [&](const auto& p) { return p.first == num; });
      if (pos == stm->entries.end() && static_cast<std::size_t>(e.index) < stm->entries.size()) {
        pos = stm->entries.begin() + e.index;
      }
      if (pos != stm->entries.end()) {
        Parser p(stm->data, pos->second);
        result = p.parse_object();
      }
    }
  }
  std::lock_guard lock(mutex_);
  cache_.emplace(num, std::make_shared<const Object>(result));
  return result;
}

Object PdfDocument::Impl::parse_indirect_at(std::size_t offset, int expected_num) const {
  if (offset >= bytes.size()) malformed("object offset beyond end of file");
  Parser p(bytes, offset);
  Lexer& lex = p.lexer();
  Token num = lex.next();
  Token gen = lex.next();
  Token kw = lex.next();
  if (num.kind != Token::Kind::Integer || gen.kind != Token::Kind::Integer || kw.kind != Token::Kind::Keyword ||
      kw.text != "obj") {
    malformed("bad object header at offset " + std::to_string(offset));
  }
  if (expected_num >= 0 && static_cast<int>(num.number) != expected_num) {
    malformed("object number mismatch at offset " + std::to_string(offset));
  }
  Object obj = p.parse_object();
  Token next = lex.peek();
  if (next.kind != Token::Kind::Keyword || next.text != "stream") return obj;
  const Dict* dict = obj.as_dict();
  if (dict == nullptr) malformed("stream without dictionary");
  lex.next();
  std::size_t start = lex.pos();
  if (start < bytes.size() && bytes[start] == '\r') ++start;
  if (start < bytes.size() && bytes[start] == '\n') ++start;

  std::optional<std::size_t> length;
  if (const Object* len = dict->find("Length")) {
    if (len->as_ref() != nullptr) {
      if (len->as_ref()->num != expected_num) length = resolve(*len).as_int();
    } else {
      length = len->as_int();
    }
  }
  std::string_view view = bytes;
  bool length_ok = false;
  if (length && *length <= view.size() - start) {
    Lexer after(view, start + *length);
    Token t = after.peek();
    length_ok = t.kind == Token::Kind::Keyword && t.text == "endstream";
  }
  std::size_t end;
  if (length_ok) {
    end = start + *length;
  } else {
    std::size_t p_end = view.find("endstream", start);
    if (p_end == std::string_view::npos) malformed("unterminated stream");
    end = p_end;
    if (end > start && view[end - 1] == '\n') --end;
    if (end > start && view[end - 1] == '\r') --end;
  }
  return Stream{*dict, std::string(view.substr(start, end - start))};
}

std::string PdfDocument::Impl::decode_stream(const Stream& stream) const {
  std::vector<FilterStage> stages;
  Object filter = stream.dict.find("Filter") ? resolve(*stream.dict.find("Filter")) : Object{};
  Object parms = stream.dict.find("DecodeParms") ? resolve(*stream.dict.find("DecodeParms")) : Object{};
  if (const Name* n = filter.as_name()) {
    stages.push_back({n->value, resolve_dict(parms)});
  } else if (const Array* a = filter.as_array()) {
    const Array* pa = parms.as_array();
    for (std::size_t i = 0; i < a->size(); ++i) {
      Object f = resolve((*a)[i]);
      if (const Name* fn = f.as_name()) {
        Dict pd = (pa != nullptr && i < pa->size()) ? resolve_dict((*pa)[i]) : Dict{};
        stages.push_back({fn->value, std::move(pd)});
      }
    }
  }
  return apply_filters(stream.data, stages);
}

std::shared_ptr<const PdfDocument::Impl::ObjStm> PdfDocument::Impl::load_objstm(int num) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = objstms_.find(num); it != objstms_.end()) return it->second;
  }
  Object obj = get(num);
  const Stream* s = obj.as_stream();
  if (s == nullptr) malformed("object stream " + std::to_string(num) + " missing");
  auto stm = std::make_shared<ObjStm>();
  stm->data = decode_stream(*s);
  const auto n = resolve(s->dict.find("N") ? *s->dict.find("N") : Object{}).as_int().value_or(0);
  const auto first = resolve(s->dict.find("First") ? *s->dict.find("First") : Object{}).as_int().value_or(0);
  if (n < 0 || first < 0 || static_cast<std::size_t>(first) > stm->data.size()) malformed("bad object stream header");
  Lexer lex(stm->data);
  for (std::int64_t i = 0; i < n; ++i) {
    Token a = lex.next();
    Token b = lex.next();
    if (a.kind != Token::Kind::Integer || b.kind != Token::Kind::Integer) break;
    stm->entries.emplace_back(static_cast<int>(a.number), static_cast<std::size_t>(first) + static_cast<std::size_t>(b.number));
  }
  std::lock_guard lock(mutex_);
  objstms_.emplace(num, stm);
  return stm;
}

std::map<int, std::size_t> PdfDocument::Impl::scan_offsets() const {
  {
    std::lock_guard lock(mutex_);
    if (scanned_) return *scanned_;
  }
  std::map<int, std::size_t> found;
  std::string_view v = bytes;
  std::size_t p = 0;
  while ((p = v.find("obj", p)) != std::string_view::npos) {
    // walk back over "<num> <gen> "
    std::size_t q = p;
    auto skip_ws_back = [&] {
      while (q > 0 && is_pdf_whitespace(v[q - 1])) --q;
    };
    auto digits_back = [&]() -> std::optional<std::size_t> {
      std::size_t e = q;
      while (q > 0 && is_digit(v[q - 1])) --q;
      if (q == e) return std::nullopt;
      return e;
    };
    skip_ws_back();
    auto gen_end = digits_back();
    if (gen_end) {
      skip_ws_back();
      std::size_t num_end_q = q;
      auto num_end = digits_back();
      if (num_end && (q == 0 || is_pdf_whitespace(v[q - 1]) || is_pdf_delimiter(v[q - 1])) && num_end_q != q) {
        int num = 0;
        std::from_chars(v.data() + q, v.data() + *num_end, num);
        found[num] = q;
      }
    }
    p += 3;
  }
  std::lock_guard lock(mutex_);
  scanned_ = std::make_unique<std::map<int, std::size_t>>(found);
  return found;
}

std::optional<std::size_t> PdfDocument::Impl::page_index_of(const Ref& ref) const {
  for (std::size_t i = 0; i < page_nodes.size(); ++i) {
    if (page_nodes[i].ref.num == ref.num) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

void add_entry(std::map<int, XrefEntry>& xref, int num, XrefEntry e) {
  // Sections are read newest first, so the first entry seen wins.
  xref.emplace(num, e);
}

class XrefReader {
 public:
  explicit XrefReader(PdfDocument::Impl& doc) : doc_(doc) {}

  void read_chain(std::size_t offset) {
    std::set<std::size_t> visited;
    std::optional<std::size_t> next = offset;
    bool first = true;
    while (next) {
      if (!visited.insert(*next).second) break;
      auto [trailer, prev] = read_section(*next, first);
      if (first) doc_.trailer = trailer;
      first = false;
      next = prev;
    }
  }

 private:
  std::pair<Dict, std::optional<std::size_t>> read_section(std::size_t offset, bool newest) {
    std::string_view v = doc_.bytes;
    if (offset >= v.size()) malformed("startxref beyond end of file");
    Lexer lex(v, offset);
    Token t = lex.peek();
    if (t.kind == Token::Kind::Keyword && t.text == "xref") {
      lex.next();
      if (newest) doc_.xref_is_stream = false;
      return read_table(lex);
    }
    if (newest) doc_.xref_is_stream = true;
    return read_stream(offset);
  }

  std::pair<Dict, std::optional<std::size_t>> read_table(Lexer& lex) {
    while (true) {
      Token start = lex.next();
      if (start.kind == Token::Kind::Keyword && start.text == "trailer") break;
      Token count = lex.next();
      if (start.kind != Token::Kind::Integer || count.kind != Token::Kind::Integer) malformed("bad xref subsection");
      const auto first = static_cast<int>(start.number);
      const auto n = static_cast<int>(count.number);
      if (n < 0 || n > 10'000'000) malformed("bad xref subsection size");
      for (int i = 0; i < n; ++i) {
        Token off = lex.next();
        Token gen = lex.next();
        Token kind = lex.next();
        if (off.kind != Token::Kind::Integer || gen.kind != Token::Kind::Integer || kind.kind != Token::Kind::Keyword) {
          malformed("bad xref entry");
        }
        XrefEntry e;
        e.gen = static_cast<int>(gen.number);
        if (kind.text == "n") {
          e.type = XrefEntry::Type::Offset;
          e.offset = static_cast<std::size_t>(off.number);
        }
        // Entries for object 0 are always free; skip "n" entries with offset 0.
        if (e.type == XrefEntry::Type::Offset && e.offset == 0) e.type = XrefEntry::Type::Free;
        add_entry(doc_.xref, first + i, e);
      }
    }
    Parser p(lex.data(), lex.pos());
    Object trailer_obj = p.parse_object();
    const Dict* trailer = trailer_obj.as_dict();
    if (trailer == nullptr) malformed("trailer is not a dictionary");
    if (const Object* stm = trailer->find("XRefStm")) {
      if (auto off = stm->as_int()) {
        try {
          read_stream(static_cast<std::size_t>(*off));
        } catch (const Error&) {
          // hybrid section is optional for readers that understand tables
        }
      }
    }
    return {*trailer, prev_of(*trailer)};
  }

  std::pair<Dict, std::optional<std::size_t>> read_stream(std::size_t offset) {
    Object obj = doc_.parse_indirect_at(offset, -1);
    const Stream* s = obj.as_stream();
    if (s == nullptr || !(s->dict.find("Type") && s->dict.find("Type")->is_name("XRef"))) {
      malformed("cross-reference stream expected");
    }
    const std::string data = doc_.decode_stream(*s);
    const Array* w = s->dict.find("W") ? s->dict.find("W")->as_array() : nullptr;
    if (w == nullptr || w->size() < 3) malformed("xref stream without /W");
    int widths[3];
    int row = 0;
    for (int i = 0; i < 3; ++i) {
      widths[i] = static_cast<int>((*w)[static_cast<std::size_t>(i)].as_int().value_or(0));
      if (widths[i] < 0 || widths[i] > 8) malformed("bad /W in xref stream");
      row += widths[i];
    }
    if (row == 0) malformed("bad /W in xref stream");
    std::vector<std::pair<int, int>> ranges;
    if (const Object* idx = s->dict.find("Index"); idx && idx->as_array()) {
      const Array& a = *idx->as_array();
      for (std::size_t i = 0; i + 1 < a.size(); i += 2) {
        ranges.emplace_back(static_cast<int>(a[i].as_int().value_or(0)), static_cast<int>(a[i + 1].as_int().value_or(0)));
      }
    } else {
      ranges.emplace_back(0, static_cast<int>(s->dict.find("Size") ? s->dict.find("Size")->as_int().value_or(0) : 0));
    }
    std::size_t pos = 0;
    auto field = [&](int width, std::uint64_t fallback) -> std::uint64_t {
      if (width == 0) return fallback;
      std::uint64_t v = 0;
      for (int k = 0; k < width; ++k) v = (v << 8) | static_cast<unsigned char>(data[pos++]);
      return v;
    };
    for (auto [first, count] : ranges) {
      for (int i = 0; i < count; ++i) {
        if (pos + static_cast<std::size_t>(row) > data.size()) break;
        const auto type = field(widths[0], 1);
        const auto f2 = field(widths[1], 0);
        const auto f3 = field(widths[2], 0);
        XrefEntry e;
        if (type == 1) {
          e.type = XrefEntry::Type::Offset;
          e.offset = static_cast<std::size_t>(f2);
          e.gen = static_cast<int>(f3);
        } else if (type == 2) {
          e.type = XrefEntry::Type::Compressed;
          e.stream = static_cast<int>(f2);
          e.index = static_cast<int>(f3);
        }
        add_entry(doc_.xref, first + i, e);
      }
    }
    return {s->dict, prev_of(s->dict)};
  }

  static std::optional<std::size_t> prev_of(const Dict& trailer) {
    if (const Object* prev = trailer.find("Prev")) {
      if (auto v = prev->as_int(); v && *v >= 0) return static_cast<std::size_t>(*v);
    }
    return std::nullopt;
  }

  PdfDocument::Impl& doc_;
};

}  // namespace

namespace {

void collect_pages(const PdfDocument::Impl& doc, const Object& node_ref, Dict inherited, std::set<int>& visited,
                   std::vector<PageNode>& out) {
  const Ref* ref = node_ref.as_ref();
  if (ref != nullptr && !visited.insert(ref->num).second) return;  // cycle
  Dict node = doc.resolve_dict(node_ref);
  for (const char* key : {"Resources", "MediaBox", "CropBox", "Rotate"}) {
    if (const Object* v = node.find(key)) inherited.set(key, *v);
  }
  const Object* kids = node.find("Kids");
  const bool is_tree = (node.find("Type") && node.find("Type")->is_name("Pages")) || kids != nullptr;
  if (!is_tree) {
    if (out.size() >= k_max_pages) malformed("too many pages");
    PageNode page;
    if (ref != nullptr) page.ref = *ref;
    page.dict = node;
    page.resources = inherited.find("Resources") ? doc.resolve_dict(*inherited.find("Resources")) : Dict{};
    page.media_box = Rect{0, 0, 612, 792};
    if (const Object* mb = inherited.find("MediaBox")) {
      if (auto r = rect_from(doc, *mb)) page.media_box = *r;
    }
    out.push_back(std::move(page));
    return;
  }
  if (kids == nullptr) return;
  Object resolved_kids = doc.resolve(*kids);
  const Array* arr = resolved_kids.as_array();
  if (arr == nullptr) return;
  for (const Object& kid : *arr) collect_pages(doc, kid, inherited, visited, out);
}

std::size_t read_startxref(std::string_view v) {
  const std::size_t p = v.rfind("startxref");
  if (p == std::string_view::npos) malformed("no startxref");
  Lexer lex(v, p + 9);
  Token t = lex.next();
  if (t.kind != Token::Kind::Integer) malformed("bad startxref");
  return static_cast<std::size_t>(t.number);
}

// Last resort for files whose cross-reference data is unusable: index every
// "n g obj" header and pick up trailer dictionaries along the way.
void reconstruct(PdfDocument::Impl& doc) {
  doc.xref.clear();
  doc.reconstructed = true;
  for (auto [num, off] : doc.scan_offsets()) {
    XrefEntry e;
    e.type = XrefEntry::Type::Offset;
    e.offset = off;
    doc.xref[num] = e;
  }
  std::string_view v = doc.bytes;
  std::size_t p = v.rfind("trailer");
  if (p != std::string_view::npos) {
    try {
      Parser parser(v, p + 7);
      Object t = parser.parse_object();
      if (const Dict* d = t.as_dict()) doc.trailer = *d;
    } catch (const Error&) {
    }
  }
  if (!doc.trailer.contains("Root")) {
    for (const auto& [num, e] : doc.xref) {
      Object o;
      try {
        o = doc.get(num);
      } catch (const Error&) {
        continue;
      }
      Dict d = o.as_stream() ? o.as_stream()->dict : (o.as_dict() ? *o.as_dict() : Dict{});
      const Object* type = d.find("Type");
      if (type && type->is_name("Catalog")) doc.trailer.set("Root", Ref{num, 0});
      if (type && type->is_name("XRef")) {
        for (const char* key : {"Root", "Info", "Encrypt"}) {
          if (const Object* val = d.find(key); val && !doc.trailer.contains(key)) doc.trailer.set(key, *val);
        }
      }
    }
  }
  // Objects inside object streams are invisible to the header scan.
  for (const auto& [num, off] : doc.scan_offsets()) {
    Object o;
    try {
      o = doc.get(num);
    } catch (const Error&) {
      continue;
    }
    const Stream* s = o.as_stream();
    if (s == nullptr || !s->dict.find("Type") || !s->dict.find("Type")->is_name("ObjStm")) continue;
    const auto n = s->dict.find("N") ? s->dict.find("N")->as_int().value_or(0) : 0;
    try {
      Lexer lex(doc.decode_stream(*s));
      for (std::int64_t i = 0; i < n; ++i) {
        Token a = lex.next();
        lex.next();
        if (a.kind != Token::Kind::Integer) break;
        XrefEntry e;
        e.type = XrefEntry::Type::Compressed;
        e.stream = num;
        e.index = static_cast<int>(i);
        doc.xref.emplace(static_cast<int>(a.number), e);
      }
    } catch (const Error&) {
    }
  }
}

void check_header(std::string_view v) {
  const std::size_t p = v.substr(0, std::min<std::size_t>(v.size(), 1024)).find("%PDF-");
  if (p == std::string_view::npos) malformed("not a PDF (missing %PDF- header)");
}

}  // namespace

std::shared_ptr<PdfDocument::Impl> load_document(std::string bytes) {
  auto doc = std::make_shared<PdfDocument::Impl>();
  doc->bytes = std::move(bytes);
  std::string_view v = doc->bytes;
  if (v.empty()) malformed("empty input");
  check_header(v);

  bool ok = false;
  try {
    doc->last_xref_offset = read_startxref(v);
    XrefReader(*doc).read_chain(doc->last_xref_offset);
    ok = doc->trailer.contains("Root");
  } catch (const Error&) {
    ok = false;
  }
  if (!ok) {
    reconstruct(*doc);
    if (!doc->trailer.contains("Root")) malformed("no document catalog found");
  }
  if (doc->trailer.contains("Encrypt")) {
    throw Error(ErrorCode::EncryptedPdf, "document is encrypted; password-protected PDFs are not supported");
  }

  Dict catalog = doc->resolve_dict(*doc->trailer.find("Root"));
  const Object* pages = catalog.find("Pages");
  if (pages == nullptr) malformed("catalog has no /Pages");
  if (const Ref* r = pages->as_ref()) doc->pages_root = *r;
  std::set<int> visited;
  collect_pages(*doc, *pages, Dict{}, visited, doc->page_nodes);
  if (doc->page_nodes.empty()) malformed("document has no pages");

  if (const Object* info_ref = doc->trailer.find("Info")) {
    Dict info = doc->resolve_dict(*info_ref);
    doc->info.title = info_text(*doc, info, "Title");
    doc->info.author = info_text(*doc, info, "Author");
    if (auto raw = info_text(*doc, info, "CreationDate")) doc->info.creation_date = parse_pdf_date(*raw);
  }

  doc->pages.reserve(doc->page_nodes.size());
  for (std::size_t i = 0; i < doc->page_nodes.size(); ++i) {
    PageContent content;
    try {
      content = extract_page_content(*doc, doc->page_nodes[i], i);
    } catch (const Error&) {
      // Undecodable content streams leave the page without text.
      content = PageContent{};
    }
    content.page_index = i;
    content.width = doc->page_nodes[i].media_box.width;
    content.height = doc->page_nodes[i].media_box.height;
    doc->pages.push_back(std::move(content));
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Public surface

namespace {

[[noreturn]] void out_of_range(std::size_t index, std::size_t count) {
  throw Error(ErrorCode::PageOutOfRange,
              "page index " + std::to_string(index) + " out of range for " + std::to_string(count) + "-page document");
}

std::optional<Object> lookup_name_tree(const PdfDocument::Impl& doc, const Dict& node, std::string_view key,
                                       int depth = 0) {
  if (depth > 32) return std::nullopt;
  if (const Object* names = node.find("Names")) {
    Object arr_obj = doc.resolve(*names);
    if (const Array* arr = arr_obj.as_array()) {
      for (std::size_t i = 0; i + 1 < arr->size(); i += 2) {
        Object k = doc.resolve((*arr)[i]);
        if (k.as_string() && k.as_string()->bytes == key) return doc.resolve((*arr)[i + 1]);
      }
    }
  }
  if (const Object* kids = node.find("Kids")) {
    Object arr_obj = doc.resolve(*kids);
    if (const Array* arr = arr_obj.as_array()) {
      for (const Object& kid : *arr) {
        if (auto r = lookup_name_tree(doc, doc.resolve_dict(kid), key, depth + 1)) return r;
      }
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> resolve_destination(const PdfDocument::Impl& doc, const Object& dest_in) {
  Object dest = doc.resolve(dest_in);
  if (dest.as_name() || dest.as_string()) {
    const std::string key = dest.as_name() ? dest.as_name()->value : dest.as_string()->bytes;
    Dict catalog = doc.resolve_dict(*doc.trailer.find("Root"));
    std::optional<Object> found;
    if (const Object* dests = catalog.find("Dests")) {
      Dict d = doc.resolve_dict(*dests);
      if (const Object* v = d.find(key)) found = doc.resolve(*v);
    }
    if (!found) {
      if (const Object* names = catalog.find("Names")) {
        Dict nd = doc.resolve_dict(*names);
        if (const Object* tree = nd.find("Dests")) found = lookup_name_tree(doc, doc.resolve_dict(*tree), key);
      }
    }
    if (!found) return std::nullopt;
    dest = *found;
    if (const Dict* d = dest.as_dict()) {
      if (const Object* inner = d->find("D")) dest = doc.resolve(*inner);
    }
  }
  const Array* arr = dest.as_array();
  if (arr == nullptr || arr->empty()) return std::nullopt;
  if (const Ref* r = (*arr)[0].as_ref()) return doc.page_index_of(*r);
  if (auto i = (*arr)[0].as_int(); i && *i >= 0 && static_cast<std::size_t>(*i) < doc.page_nodes.size()) {
    return static_cast<std::size_t>(*i);
  }
  return std::nullopt;
}

}  // namespace

std::size_t PdfDocument::page_count() const { return impl_->pages.size(); }

const std::vector<PageContent>& PdfDocument::pages() const { return impl_->pages; }

const PageContent& PdfDocument::page(std::size_t index) const {
  if (index >= impl_->pages.size()) out_of_range(index, impl_->pages.size());
  return impl_->pages[index];
}

const InfoDictionary& PdfDocument::info() const { return impl_->info; }

Rect PdfDocument::media_box(std::size_t index) const {
  if (index >= impl_->page_nodes.size()) out_of_range(index, impl_->page_nodes.size());
  return impl_->page_nodes[index].media_box;
}

std::string_view PdfDocument::bytes() const { return impl_->bytes; }

std::vector<LinkAnnotation> PdfDocument::links(std::size_t page_index) const {
  const Impl& doc = *impl_;
  if (page_index >= doc.page_nodes.size()) out_of_range(page_index, doc.page_nodes.size());
  std::vector<LinkAnnotation> out;
  const Object* annots = doc.page_nodes[page_index].dict.find("Annots");
  if (annots == nullptr) return out;
  Object arr_obj = doc.resolve(*annots);
  const Array* arr = arr_obj.as_array();
  if (arr == nullptr) return out;
  for (const Object& a : *arr) {
    Dict annot = doc.resolve_dict(a);
    const Object* subtype = annot.find("Subtype");
    if (subtype == nullptr || !subtype->is_name("Link")) continue;
    LinkAnnotation link;
    if (const Object* r = annot.find("Rect")) {
      if (auto rect = rect_from(doc, *r)) link.rect = *rect;
    }
    if (const Object* nm = annot.find("NM")) {
      Object v = doc.resolve(*nm);
      if (v.as_string()) link.name = decode_text_string(v.as_string()->bytes);
    }
    if (const Object* dest = annot.find("Dest")) {
      link.destination_page = resolve_destination(doc, *dest);
    } else if (const Object* action = annot.find("A")) {
      Dict act = doc.resolve_dict(*action);
      if (act.find("S") && act.find("S")->is_name("GoTo") && act.find("D")) {
        link.destination_page = resolve_destination(doc, *act.find("D"));
      }
    }
    out.push_back(std::move(link));
  }
  return out;
}

PdfDocument parse_pdf(std::string_view bytes) { return PdfDocument(load_document(std::string(bytes))); }

std::string serialize(const PdfDocument& doc) { return std::string(doc.bytes()); }

std::string extract_page_text(const PdfDocument& doc, std::size_t page_index) {
  const PageContent& page = doc.page(page_index);
  std::string out;
  for (std::size_t i = 0; i < page.text_runs.size(); ++i) {
    if (i) out += '\n';
    out += page.text_runs[i].text;
  }
  return out;
}

std::size_t count_pages(const PdfDocument& doc) { return doc.page_count(); }

}  // namespace citeassist::pdf
