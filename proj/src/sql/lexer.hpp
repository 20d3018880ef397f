#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sqlsv::sql::detail {

enum class TokenType { Ident, QuotedIdent, String, Number, Symbol, End };

struct Token {
  TokenType type = TokenType::End;
  std::string text;  // verbatim lexeme
  std::size_t pos = 0;
};

// Splits SQL text into tokens, dropping whitespace and comments.
// Throws SyntaxError on unterminated literals or stray characters.
std::vector<Token> tokenize(std::string_view sql);

bool is_reserved_keyword(std::string_view word);

}  // namespace sqlsv::sql::detail
