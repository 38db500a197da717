#include "pdf/object.hpp"

#include <cmath>
#include <cstdio>

namespace citeassist::pdf {

const Object* Dict::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

Object* Dict::find(std::string_view key) {
  for (auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

void Dict::set(std::string key, Object value) {
  if (Object* existing = find(key)) {
    *existing = std::move(value);
    return;
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void Dict::erase(std::string_view key) {
  std::erase_if(entries_, [&](const auto& e) { return e.first == key; });
}

bool Dict::operator==(const Dict& other) const {
  if (size() != other.size()) return false;
  for (const auto& [k, v] : entries_) {
    const Object* o = other.find(k);
    if (o == nullptr || !(*o == v)) return false;
  }
  return true;
}

std::optional<std::int64_t> Object::as_int() const {
  if (const auto* i = std::get_if<std::int64_t>(&value_)) return *i;
  if (const auto* d = std::get_if<double>(&value_)) return static_cast<std::int64_t>(std::llround(*d));
  return std::nullopt;
}

std::optional<double> Object::as_real() const {
  if (const auto* i = std::get_if<std::int64_t>(&value_)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&value_)) return *d;
  return std::nullopt;
}

std::string format_real(double value) {
  if (std::abs(value - std::round(value)) < 1e-9) {
    return std::to_string(static_cast<long long>(std::llround(value)));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

namespace {

bool is_regular_name_char(unsigned char c) {
  if (c < 0x21 || c > 0x7e) return false;
  switch (c) {
    case '(': case ')': case '<': case '>': case '[': case ']':
    case '{': case '}': case '/': case '%': case '#':
      return false;
    default:
      return true;
  }
}

void write_name(std::string& out, std::string_view name) {
  out += '/';
  static constexpr char hex[] = "0123456789ABCDEF";
  for (unsigned char c : name) {
    if (is_regular_name_char(c)) {
      out += static_cast<char>(c);
    } else {
      out += '#';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
}

void write_string(std::string& out, const String& s) {
  out += '(';
  for (char c : s.bytes) {
    switch (c) {
      case '(': out += "\\("; break;
      case ')': out += "\\)"; break;
      case '\\': out += "\\\\"; break;
      case '\r': out += "\\r"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  out += ')';
}

void write(std::string& out, const Object& obj);

void write_dict(std::string& out, const Dict& dict) {
  out += "<<";
  for (const auto& [k, v] : dict) {
    write_name(out, k);
    out += ' ';
    write(out, v);
  }
  out += ">>";
}

void write(std::string& out, const Object& obj) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Null>) {
          out += "null";
        } else if constexpr (std::is_same_v<T, bool>) {
          out += v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          out += std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          out += format_real(v);
        } else if constexpr (std::is_same_v<T, String>) {
          write_string(out, v);
        } else if constexpr (std::is_same_v<T, Name>) {
          write_name(out, v.value);
        } else if constexpr (std::is_same_v<T, Array>) {
          out += '[';
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ' ';
            write(out, v[i]);
          }
          out += ']';
        } else if constexpr (std::is_same_v<T, Dict>) {
          write_dict(out, v);
        } else if constexpr (std::is_same_v<T, Stream>) {
          Dict d = v.dict;
          d.set("Length", Object(static_cast<std::int64_t>(v.data.size())));
          write_dict(out, d);
          out += "\nstream\n";
          out += v.data;
          out += "\nendstream";
        } else if constexpr (std::is_same_v<T, Ref>) {
          out += std::to_string(v.num) + ' ' + std::to_string(v.gen) + " R";
        }
      },
      obj.value());
}

}  // namespace

std::string to_pdf(const Object& obj) {
  std::string out;
  write(out, obj);
  return out;
}

std::string to_pdf(const Dict& dict) {
  std::string out;
  write_dict(out, dict);
  return out;
}

}  // namespace citeassist::pdf
