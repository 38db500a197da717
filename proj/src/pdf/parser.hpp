#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pdf/object.hpp"

namespace citeassist::pdf {

struct Token {
  enum class Kind {
    End,
    Integer,
    Real,
    String,
    Name,
    ArrayOpen,
    ArrayClose,
    DictOpen,
    DictClose,
    Keyword,  // true/false/null/obj/R/operators
  };
  Kind kind = Kind::End;
  std::string text;  // decoded bytes for String/Name, spelling for Keyword
  double number = 0;
  bool hex = false;
  std::size_t offset = 0;
};

bool is_pdf_whitespace(char c);
bool is_pdf_delimiter(char c);

class Lexer {
 public:
  explicit Lexer(std::string_view data, std::size_t pos = 0) : data_(data), pos_(pos) {}

  Token next();
  Token peek();
  void skip_whitespace();
  std::size_t pos() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }
  std::string_view data() const { return data_; }

 private:
  Token read_literal_string(std::size_t start);
  Token read_hex_string(std::size_t start);
  Token read_name(std::size_t start);
  Token read_number_or_keyword(std::size_t start);

  std::string_view data_;
  std::size_t pos_;
};

// Recursive-descent object parser over a Lexer. Indirect references
// ("n g R") are recognized; streams are handled by the caller since their
// length may live in another object.
class Parser {
 public:
  explicit Parser(std::string_view data, std::size_t pos = 0) : lexer_(data, pos) {}

  Object parse_object();
  // Parses starting from an already-consumed token.
  Object parse_from(Token first);
  Lexer& lexer() { return lexer_; }

 private:
  Object parse_array();
  Object parse_dict_body();

  Lexer lexer_;
  int depth_ = 0;
};

// One operator with its operands, as read from a content stream.
struct ContentOp {
  std::string op;
  std::vector<Object> operands;
};

// Flattens a content stream into operations. Inline image data is skipped.
std::vector<ContentOp> parse_content(std::string_view data);

}  // namespace citeassist::pdf
