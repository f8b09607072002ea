#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sosc/dsl.hpp"

namespace sosc::dsl {

enum class TokKind { Ident, Int, String, Punct, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;  // identifier, punctuation, or decoded string contents
  Int value = 0;
  int line = 1;
  int col = 1;
  int endLine = 1;
  int endCol = 1;  // one past the last character
};

// Splits the whole input up front. Lexical errors throw ParseFailure with
// the position of the offending character.
std::vector<Token> tokenize(std::string_view text, const std::string& file);

std::string_view describe(const Token& t);

}  // namespace sosc::dsl
