#include "lexer.hpp"

#include <array>
#include <cctype>
#include <limits>

namespace sosc::dsl {

namespace {

// Longest match first.
constexpr std::array<std::string_view, 11> kMultiPunct = {
    "->", "--", ":=", "==", "!=", "<=", ">=", "&&", "||", "=>", ".."};
constexpr std::string_view kSinglePunct = "{}()[];,:.*=<>+-!/'";

[[noreturn]] void fail(const std::string& file, int line, int col, std::string msg) {
  Diagnostic d;
  d.message = std::move(msg);
  d.span = SourceSpan{file, line, col, line, col + 1};
  throw ParseFailure({d});
}

}  // namespace

std::vector<Token> tokenize(std::string_view text, const std::string& file) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };

  while (i < text.size()) {
    char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
      t.kind = TokKind::Ident;
      t.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      Int v = 0;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
        int digit = text[j] - '0';
        if (v > (std::numeric_limits<Int>::max() - digit) / 10)
          fail(file, line, col, "integer literal out of range");
        v = v * 10 + digit;
        ++j;
      }
      if (j < text.size() && (std::isalpha(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        fail(file, line, col + int(j - i), "malformed number");
      t.kind = TokKind::Int;
      t.value = v;
      t.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (c == '"') {
      std::string s;
      advance(1);
      bool closed = false;
      while (i < text.size()) {
        char d = text[i];
        if (d == '"') {
          advance(1);
          closed = true;
          break;
        }
        if (d == '\n') break;
        if (d == '\\') {
          if (i + 1 >= text.size()) break;
          char e = text[i + 1];
          if (e == 'n') {
            s += '\n';
          } else if (e == '"' || e == '\\') {
            s += e;
          } else {
            fail(file, line, col, std::string("unknown escape '\\") + e + "'");
          }
          advance(2);
          continue;
        }
        s += d;
        advance(1);
      }
      if (!closed) fail(file, t.line, t.col, "unterminated string literal");
      t.kind = TokKind::String;
      t.text = std::move(s);
    } else {
      std::string_view rest = text.substr(i);
      bool matched = false;
      for (std::string_view p : kMultiPunct) {
        if (rest.starts_with(p)) {
          t.text = std::string(p);
          matched = true;
          break;
        }
      }
      if (!matched && kSinglePunct.find(c) != std::string_view::npos) {
        t.text = std::string(1, c);
        matched = true;
      }
      if (!matched) {
        fail(file, line, col, std::string("unexpected character '") + c + "'");
      }
      t.kind = TokKind::Punct;
      advance(t.text.size());
    }
    t.endLine = line;
    t.endCol = col;
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = TokKind::End;
  end.line = end.endLine = line;
  end.col = end.endCol = col;
  out.push_back(end);
  return out;
}

std::string_view describe(const Token& t) {
  switch (t.kind) {
    case TokKind::Ident:
      return "identifier";
    case TokKind::Int:
      return "integer";
    case TokKind::String:
      return "string";
    case TokKind::Punct:
      return "punctuation";
    case TokKind::End:
      return "end of input";
  }
  return "token";
}

}  // namespace sosc::dsl
