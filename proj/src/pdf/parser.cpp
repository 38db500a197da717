#include "pdf/parser.hpp"

#include <charconv>
#include <cstdlib>

#include "citeassist/error.hpp"

namespace citeassist::pdf {

namespace {

constexpr int k_max_depth = 256;

[[noreturn]] void fail(const std::string& what, std::size_t offset) {
  throw Error(ErrorCode::MalformedPdf, what + " at offset " + std::to_string(offset));
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

bool is_pdf_whitespace(char c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0';
}

bool is_pdf_delimiter(char c) {
  switch (c) {
    case '(': case ')': case '<': case '>': case '[': case ']':
    case '{': case '}': case '/': case '%':
      return true;
    default:
      return false;
  }
}

void Lexer::skip_whitespace() {
  while (pos_ < data_.size()) {
    char c = data_[pos_];
    if (is_pdf_whitespace(c)) {
      ++pos_;
    } else if (c == '%') {
      while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
    } else {
      break;
    }
  }
}

Token Lexer::peek() {
  std::size_t saved = pos_;
  Token t = next();
  pos_ = saved;
  return t;
}

Token Lexer::next() {
  skip_whitespace();
  Token tok;
  tok.offset = pos_;
  if (pos_ >= data_.size()) return tok;
  const std::size_t start = pos_;
  char c = data_[pos_];
  switch (c) {
    case '(':
      return read_literal_string(start);
    case '<':
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
        pos_ += 2;
        tok.kind = Token::Kind::DictOpen;
        return tok;
      }
      return read_hex_string(start);
    case '>':
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '>') {
        pos_ += 2;
        tok.kind = Token::Kind::DictClose;
        return tok;
      }
      fail("stray '>'", pos_);
    case '[':
      ++pos_;
      tok.kind = Token::Kind::ArrayOpen;
      return tok;
    case ']':
      ++pos_;
      tok.kind = Token::Kind::ArrayClose;
      return tok;
    case '{':
    case '}':
      // PostScript calculator braces; surface as keywords.
      ++pos_;
      tok.kind = Token::Kind::Keyword;
      tok.text = std::string(1, c);
      return tok;
    case '/':
      return read_name(start);
    case ')':
      fail("stray ')'", pos_);
    default:
      return read_number_or_keyword(start);
  }
}

Token Lexer::read_literal_string(std::size_t start) {
  Token tok;
  tok.kind = Token::Kind::String;
  tok.offset = start;
  ++pos_;
  int depth = 1;
  std::string& out = tok.text;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '\\') {
      if (pos_ >= data_.size()) break;
      char e = data_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 't': out += '\t'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case '\r':
          if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
          break;
        case '\n':
          break;
        default:
          if (e >= '0' && e <= '7') {
            int value = e - '0';
            for (int i = 0; i < 2 && pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '7'; ++i) {
              value = value * 8 + (data_[pos_++] - '0');
            }
            out += static_cast<char>(value & 0xFF);
          } else {
            out += e;
          }
      }
    } else if (c == '(') {
      ++depth;
      out += c;
    } else if (c == ')') {
      if (--depth == 0) return tok;
      out += c;
    } else {
      out += c;
    }
  }
  fail("unterminated string", start);
}

Token Lexer::read_hex_string(std::size_t start) {
  Token tok;
  tok.kind = Token::Kind::String;
  tok.hex = true;
  tok.offset = start;
  ++pos_;
  int pending = -1;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '>') {
      if (pending >= 0) tok.text += static_cast<char>(pending << 4);
      return tok;
    }
    if (is_pdf_whitespace(c)) continue;
    int v = hex_value(c);
    if (v < 0) fail("bad hex digit", pos_ - 1);
    if (pending < 0) {
      pending = v;
    } else {
      tok.text += static_cast<char>((pending << 4) | v);
      pending = -1;
    }
  }
  fail("unterminated hex string", start);
}

Token Lexer::read_name(std::size_t start) {
  Token tok;
  tok.kind = Token::Kind::Name;
  tok.offset = start;
  ++pos_;
  while (pos_ < data_.size()) {
    char c = data_[pos_];
    if (is_pdf_whitespace(c) || is_pdf_delimiter(c)) break;
    if (c == '#' && pos_ + 2 < data_.size() && hex_value(data_[pos_ + 1]) >= 0 &&
        hex_value(data_[pos_ + 2]) >= 0) {
      tok.text += static_cast<char>((hex_value(data_[pos_ + 1]) << 4) | hex_value(data_[pos_ + 2]));
      pos_ += 3;
      continue;
    }
    tok.text += c;
    ++pos_;
  }
  return tok;
}

Token Lexer::read_number_or_keyword(std::size_t start) {
  while (pos_ < data_.size() && !is_pdf_whitespace(data_[pos_]) && !is_pdf_delimiter(data_[pos_])) ++pos_;
  std::string_view word = data_.substr(start, pos_ - start);
  Token tok;
  tok.offset = start;
  if (word.empty()) {
    // Unrecognized byte; consume it so callers always make progress.
    ++pos_;
    tok.kind = Token::Kind::Keyword;
    tok.text = std::string(1, data_[start]);
    return tok;
  }
  bool numeric = true;
  bool seen_dot = false;
  bool seen_digit = false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    char c = word[i];
    if ((c == '+' || c == '-') && i == 0) continue;
    if (c == '.' && !seen_dot) {
      seen_dot = true;
      continue;
    }
    if (c >= '0' && c <= '9') {
      seen_digit = true;
      continue;
    }
    numeric = false;
    break;
  }
  if (numeric && seen_digit) {
    tok.kind = seen_dot ? Token::Kind::Real : Token::Kind::Integer;
    tok.text = std::string(word);
    tok.number = std::strtod(tok.text.c_str(), nullptr);
    return tok;
  }
  tok.kind = Token::Kind::Keyword;
  tok.text = std::string(word);
  return tok;
}

Object Parser::parse_object() { return parse_from(lexer_.next()); }

Object Parser::parse_from(Token tok) {
  switch (tok.kind) {
    case Token::Kind::End:
      fail("unexpected end of data", tok.offset);
    case Token::Kind::Integer: {
      // "n g R" lookahead
      std::size_t saved = lexer_.pos();
      Token gen = lexer_.next();
      if (gen.kind == Token::Kind::Integer) {
        Token r = lexer_.next();
        if (r.kind == Token::Kind::Keyword && r.text == "R") {
          return Ref{static_cast<int>(tok.number), static_cast<int>(gen.number)};
        }
      }
      lexer_.seek(saved);
      std::int64_t value = 0;
      auto res = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(),
                                 value);
      if (res.ec != std::errc{}) {
        // '+' prefix or overflow; fall back to floating parse
        return static_cast<std::int64_t>(tok.number);
      }
      return value;
    }
    case Token::Kind::Real:
      return tok.number;
    case Token::Kind::String:
      return String{std::move(tok.text), tok.hex};
    case Token::Kind::Name:
      return Name{std::move(tok.text)};
    case Token::Kind::ArrayOpen:
      return parse_array();
    case Token::Kind::DictOpen:
      return parse_dict_body();
    case Token::Kind::Keyword:
      if (tok.text == "true") return true;
      if (tok.text == "false") return false;
      if (tok.text == "null") return Null{};
      fail("unexpected keyword '" + tok.text + "'", tok.offset);
    case Token::Kind::ArrayClose:
    case Token::Kind::DictClose:
      fail("unexpected closing delimiter", tok.offset);
  }
  fail("unreachable", tok.offset);
}

Object Parser::parse_array() {
  if (++depth_ > k_max_depth) fail("nesting too deep", lexer_.pos());
  Array items;
  while (true) {
    Token t = lexer_.next();
    if (t.kind == Token::Kind::ArrayClose) break;
    if (t.kind == Token::Kind::End) fail("unterminated array", t.offset);
    items.push_back(parse_from(std::move(t)));
  }
  --depth_;
  return items;
}

Object Parser::parse_dict_body() {
  if (++depth_ > k_max_depth) fail("nesting too deep", lexer_.pos());
  Dict dict;
  while (true) {
    Token key = lexer_.next();
    if (key.kind == Token::Kind::DictClose) break;
    if (key.kind != Token::Kind::Name) fail("dictionary key is not a name", key.offset);
    Token value = lexer_.next();
    if (value.kind == Token::Kind::DictClose) {
      // Key without value; treat as null and close.
      dict.set(std::move(key.text), Null{});
      break;
    }
    dict.set(std::move(key.text), parse_from(std::move(value)));
  }
  --depth_;
  return dict;
}

std::vector<ContentOp> parse_content(std::string_view data) {
  std::vector<ContentOp> ops;
  Parser parser(data);
  Lexer& lex = parser.lexer();
  std::vector<Object> operands;
  while (true) {
    Token t;
    try {
      t = lex.next();
    } catch (const Error&) {
      break;  // truncated content: keep what was read
    }
    if (t.kind == Token::Kind::End) break;
    if (t.kind == Token::Kind::Keyword && t.text != "true" && t.text != "false" && t.text != "null") {
      if (t.text == "BI") {
        // Skip inline image: dictionary up to ID, then binary data up to EI.
        while (true) {
          Token k = lex.next();
          if (k.kind == Token::Kind::End) return ops;
          if (k.kind == Token::Kind::Keyword && k.text == "ID") break;
        }
        std::size_t p = lex.pos() + 1;
        std::size_t end = std::string_view::npos;
        while (p + 1 < data.size()) {
          if (data[p] == 'E' && data[p + 1] == 'I' && is_pdf_whitespace(data[p - 1]) &&
              (p + 2 >= data.size() || is_pdf_whitespace(data[p + 2]) || is_pdf_delimiter(data[p + 2]))) {
            end = p + 2;
            break;
          }
          ++p;
        }
        if (end == std::string_view::npos) return ops;
        lex.seek(end);
        operands.clear();
        continue;
      }
      ops.push_back(ContentOp{t.text, std::move(operands)});
      operands.clear();
      continue;
    }
    try {
      operands.push_back(parser.parse_from(std::move(t)));
    } catch (const Error&) {
      break;
    }
  }
  return ops;
}

}  // namespace citeassist::pdf
