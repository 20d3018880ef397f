#include "lexer.hpp"

#include <array>
#include <cctype>

#include "sqlsv/errors.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::sql::detail {

namespace {

constexpr std::array<std::string_view, 47> kReserved = {
    "SELECT", "FROM",   "WHERE",  "GROUP",     "BY",     "HAVING", "ORDER",  "LIMIT",
    "OFFSET", "JOIN",   "INNER",  "LEFT",      "RIGHT",  "FULL",   "OUTER",  "CROSS",
    "NATURAL", "ON",    "USING",  "AS",        "AND",    "OR",     "NOT",    "IN",
    "IS",     "NULL",   "LIKE",   "BETWEEN",   "ASC",    "DESC",   "DISTINCT", "UNION",
    "EXCEPT", "INTERSECT", "WITH", "CASE",     "WHEN",   "THEN",   "ELSE",   "END",
    "EXISTS", "ALL",    "GLOB",   "OVER",      "WINDOW", "RECURSIVE", "NULLS"};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

}  // namespace

bool is_reserved_keyword(std::string_view word) {
  const auto up = to_upper(word);
  for (auto k : kReserved) {
    if (k == up) return true;
  }
  return false;
}

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  auto error = [&](const std::string& what) {
    throw SyntaxError(what + " at offset " + std::to_string(i));
  };
  while (i < n) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
      const auto end = sql.find("*/", i + 2);
      if (end == std::string_view::npos) error("unterminated comment");
      i = end + 2;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < n && ident_char(sql[i])) ++i;
      out.push_back({TokenType::Ident, std::string(sql.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      if (i < n && sql[i] == '.') {
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      }
      if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (sql[j] == '+' || sql[j] == '-')) ++j;
        if (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) {
          i = j;
          while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        }
      }
      if (i < n && ident_start(sql[i])) error("malformed number");
      out.push_back({TokenType::Number, std::string(sql.substr(start, i - start)), start});
      continue;
    }
    if (c == '\'') {
      ++i;
      while (true) {
        if (i >= n) error("unterminated string literal");
        if (sql[i] == '\'') {
          if (i + 1 < n && sql[i + 1] == '\'') {
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        ++i;
      }
      out.push_back({TokenType::String, std::string(sql.substr(start, i - start)), start});
      continue;
    }
    if (c == '`' || c == '"' || c == '[') {
      const char close = c == '[' ? ']' : c;
      const auto end = sql.find(close, i + 1);
      if (end == std::string_view::npos) error("unterminated quoted identifier");
      if (end == i + 1) error("empty quoted identifier");
      i = end + 1;
      out.push_back({TokenType::QuotedIdent, std::string(sql.substr(start, i - start)), start});
      continue;
    }
    // Two-character operators first.
    if (i + 1 < n) {
      const auto two = sql.substr(i, 2);
      if (two == "<=" || two == ">=" || two == "<>" || two == "!=" || two == "==" ||
          two == "||") {
        i += 2;
        out.push_back({TokenType::Symbol, std::string(two), start});
        continue;
      }
    }
    switch (c) {
      case '(': case ')': case ',': case '.': case '*': case '+': case '-':
      case '/': case '%': case '=': case '<': case '>': case ';':
        ++i;
        out.push_back({TokenType::Symbol, std::string(1, c), start});
        continue;
      default:
        error(std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({TokenType::End, "", n});
  return out;
}

}  // namespace sqlsv::sql::detail
