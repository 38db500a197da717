#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace citeassist::pdf {

struct Null {
  bool operator==(const Null&) const = default;
};

struct Name {
  std::string value;
  bool operator==(const Name&) const = default;
};

// Raw string bytes after literal/hex decoding; no text encoding applied.
struct String {
  std::string bytes;
  bool hex = false;
  bool operator==(const String& o) const { return bytes == o.bytes; }
};

struct Ref {
  int num = 0;
  int gen = 0;
  bool operator==(const Ref&) const = default;
  bool operator<(const Ref& o) const { return num != o.num ? num < o.num : gen < o.gen; }
};

class Object;
using Array = std::vector<Object>;

// Insertion-ordered dictionary. PDF dictionaries are small, a linear scan is
// faster than a tree and keeps rewritten objects close to their source.
class Dict {
 public:
  const Object* find(std::string_view key) const;
  Object* find(std::string_view key);
  bool contains(std::string_view key) const { return find(key) != nullptr; }
  void set(std::string key, Object value);
  void erase(std::string_view key);

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t size() const { return entries_.size(); }
  bool operator==(const Dict&) const;

 private:
  std::vector<std::pair<std::string, Object>> entries_;
};

struct Stream {
  Dict dict;
  std::string data;  // still encoded with the filters named in dict
  bool operator==(const Stream&) const = default;
};

class Object {
 public:
  using Value = std::variant<Null, bool, std::int64_t, double, String, Name, Array, Dict, Stream, Ref>;

  Object() = default;
  Object(Null) {}
  Object(bool b) : value_(b) {}
  Object(int i) : value_(static_cast<std::int64_t>(i)) {}
  Object(std::int64_t i) : value_(i) {}
  Object(std::size_t i) : value_(static_cast<std::int64_t>(i)) {}
  Object(double d) : value_(d) {}
  Object(String s) : value_(std::move(s)) {}
  Object(Name n) : value_(std::move(n)) {}
  Object(Array a) : value_(std::move(a)) {}
  Object(Dict d) : value_(std::move(d)) {}
  Object(Stream s) : value_(std::move(s)) {}
  Object(Ref r) : value_(r) {}

  bool is_null() const { return std::holds_alternative<Null>(value_); }
  bool is_number() const {
    return std::holds_alternative<std::int64_t>(value_) || std::holds_alternative<double>(value_);
  }
  const Name* as_name() const { return std::get_if<Name>(&value_); }
  const String* as_string() const { return std::get_if<String>(&value_); }
  const Array* as_array() const { return std::get_if<Array>(&value_); }
  Array* as_array() { return std::get_if<Array>(&value_); }
  const Dict* as_dict() const { return std::get_if<Dict>(&value_); }
  Dict* as_dict() { return std::get_if<Dict>(&value_); }
  const Stream* as_stream() const { return std::get_if<Stream>(&value_); }
  const Ref* as_ref() const { return std::get_if<Ref>(&value_); }
  const bool* as_bool() const { return std::get_if<bool>(&value_); }
  std::optional<std::int64_t> as_int() const;
  std::optional<double> as_real() const;

  bool is_name(std::string_view n) const {
    const Name* p = as_name();
    return p != nullptr && p->value == n;
  }

  const Value& value() const { return value_; }
  bool operator==(const Object&) const = default;

 private:
  Value value_;
};

// Serializes in the compact PDF syntax used by the incremental writer.
std::string to_pdf(const Object& obj);
std::string to_pdf(const Dict& dict);
std::string format_real(double value);

}  // namespace citeassist::pdf
