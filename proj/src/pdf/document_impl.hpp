#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "citeassist/pdf/document.hpp"
#include "pdf/object.hpp"

namespace citeassist::pdf {

struct XrefEntry {
  enum class Type { Free, Offset, Compressed };
  Type type = Type::Free;
  std::size_t offset = 0;  // Offset
  int gen = 0;
  int stream = 0;  // Compressed: object stream number
  int index = 0;   // Compressed: index within the stream
};

struct PageNode {
  Ref ref;
  Dict dict;       // the page object as stored
  Dict resources;  // resolved, including inherited /Resources
  Rect media_box;
};

struct PdfDocument::Impl {
  std::string bytes;
  std::map<int, XrefEntry> xref;
  Dict trailer;
  std::size_t last_xref_offset = 0;
  bool xref_is_stream = false;
  bool reconstructed = false;  // xref rebuilt by scanning object headers
  Ref pages_root;
  std::vector<PageNode> page_nodes;
  std::vector<PageContent> pages;
  InfoDictionary info;

  std::optional<std::size_t> page_index_of(const Ref& ref) const;

  Object get(int num) const;
  Object resolve(const Object& obj) const;
  // Resolves and returns the dictionary (a stream's dictionary for streams);
  // empty when obj is not dictionary-like.
  Dict resolve_dict(const Object& obj) const;
  std::string decode_stream(const Stream& stream) const;

  int next_object_number() const;
  // expected_num < 0 skips the object-number check.
  Object parse_indirect_at(std::size_t offset, int expected_num) const;
  std::map<int, std::size_t> scan_offsets() const;

 private:
  struct ObjStm {
    std::string data;
    std::vector<std::pair<int, std::size_t>> entries;  // (num, absolute offset in data)
  };

  std::shared_ptr<const ObjStm> load_objstm(int num) const;

  mutable std::mutex mutex_;
  mutable std::unordered_map<int, std::shared_ptr<const Object>> cache_;
  mutable std::unordered_map<int, std::shared_ptr<const ObjStm>> objstms_;
  mutable std::unique_ptr<std::map<int, std::size_t>> scanned_;

  friend std::shared_ptr<PdfDocument::Impl> load_document(std::string bytes);
};

std::shared_ptr<PdfDocument::Impl> load_document(std::string bytes);

// Content interpretation (text.cpp).
PageContent extract_page_content(const PdfDocument::Impl& doc, const PageNode& page, std::size_t index);

// Rectangle from a /MediaBox-style array; nullopt if malformed.
std::optional<Rect> rect_from(const PdfDocument::Impl& doc, const Object& obj);

}  // namespace citeassist::pdf
