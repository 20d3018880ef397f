#include "sqlsv/sql/parser.hpp"

#include <optional>
#include <set>
#include <utility>

#include "lexer.hpp"
#include "sqlsv/errors.hpp"

namespace sqlsv::sql {

namespace {

using detail::Token;
using detail::TokenType;
using Tree = SqlAst::Tree;

Tree leaf(AstKind kind, std::string text) { return Tree{kind, std::move(text), {}}; }
Tree node(AstKind kind, std::string text, std::vector<Tree> children) {
  return Tree{kind, std::move(text), std::move(children)};
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(detail::tokenize(text)) {}

  Tree statement() {
    reject_non_select();
    if (peek_keyword("WITH")) parse_with();
    Tree select = parse_select();
    if (peek_symbol(";")) advance();
    expect_end();
    return select;
  }

  Tree expression_only() {
    subquery_depth_allowed_ = true;
    Tree e = parse_expr();
    expect_end();
    return e;
  }

  Tree list_only(ListForm form, std::string_view label) {
    subquery_depth_allowed_ = true;
    std::vector<Tree> items;
    if (form == ListForm::Aggregate) {
      if (!peek_keyword("GROUP") && !at_end()) {
        items.push_back(parse_expr());
        while (accept_symbol(",")) items.push_back(parse_expr());
      }
      if (accept_keyword("GROUP")) {
        expect_keyword("BY");
        items.push_back(parse_expr());
        while (accept_symbol(",")) items.push_back(parse_expr());
      }
    } else {
      do {
        items.push_back(form == ListForm::SelectItems ? parse_select_item() : parse_order_item());
      } while (accept_symbol(","));
    }
    expect_end();
    return node(AstKind::List, std::string(label), std::move(items));
  }

  Tree table_name_only() {
    Tree t = parse_identifier_leaf(AstKind::Table);
    expect_end();
    return t;
  }

 private:
  // ---- token helpers -----------------------------------------------------
  const Token& peek(std::size_t ahead = 0) const {
    const auto idx = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[idx];
  }
  const Token& advance() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().type == TokenType::End; }

  bool is_keyword(const Token& t, std::string_view kw) const {
    return t.type == TokenType::Ident && iequals(t.text, kw);
  }
  bool peek_keyword(std::string_view kw, std::size_t ahead = 0) const {
    return is_keyword(peek(ahead), kw);
  }
  bool accept_keyword(std::string_view kw) {
    if (peek_keyword(kw)) {
      advance();
      return true;
    }
    return false;
  }
  std::string expect_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) fail("expected " + std::string(kw));
    return advance().text;
  }
  bool peek_symbol(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).type == TokenType::Symbol && peek(ahead).text == s;
  }
  bool accept_symbol(std::string_view s) {
    if (peek_symbol(s)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
  }
  void expect_end() {
    if (!at_end()) {
      check_trailing_unsupported();
      fail("unexpected trailing input");
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    std::string near = t.type == TokenType::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(what + " near " + near + " (offset " + std::to_string(t.pos) + ")");
  }
  [[noreturn]] static void unsupported(const std::string& construct) {
    throw UnsupportedConstruct(construct);
  }

  bool is_identifier_token(const Token& t) const {
    if (t.type == TokenType::QuotedIdent) return true;
    return t.type == TokenType::Ident && !detail::is_reserved_keyword(t.text);
  }

  void reject_non_select() {
    static const std::set<std::string> kStatements = {
        "INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER", "REPLACE",
        "PRAGMA", "ATTACH", "DETACH", "VACUUM", "EXPLAIN", "BEGIN", "COMMIT",
        "ROLLBACK", "VALUES", "ANALYZE", "REINDEX"};
    if (peek().type == TokenType::Ident && kStatements.count(to_upper(peek().text)) > 0) {
      unsupported(to_upper(peek().text) + " statement");
    }
  }

  void check_trailing_unsupported() const {
    for (auto kw : {"UNION", "EXCEPT", "INTERSECT"}) {
      if (peek_keyword(kw)) unsupported(std::string("set operation ") + kw);
    }
    if (peek_keyword("OFFSET")) unsupported("OFFSET");
    if (peek_keyword("WINDOW")) unsupported("window functions");
  }

  // ---- statements --------------------------------------------------------
  void parse_with() {
    expect_keyword("WITH");
    if (peek_keyword("RECURSIVE")) unsupported("recursive WITH");
    do {
      if (!is_identifier_token(peek())) fail("expected CTE name");
      std::string name = unquote_identifier(advance().text);
      if (peek_symbol("(")) unsupported("CTE column list");
      expect_keyword("AS");
      expect_symbol("(");
      Tree body = parse_select();
      expect_symbol(")");
      ctes_.emplace_back(to_lower(name), std::move(body));
    } while (accept_symbol(","));
  }

  Tree parse_select() {
    if (!peek_keyword("SELECT")) fail("expected SELECT");
    std::string kw = advance().text;
    if (peek_keyword("DISTINCT")) unsupported("SELECT DISTINCT");
    if (peek_keyword("ALL")) unsupported("SELECT ALL");

    const bool outer_allowed = subquery_depth_allowed_;
    subquery_depth_allowed_ = false;

    std::vector<Tree> children;
    children.push_back(parse_select_item());
    while (accept_symbol(",")) children.push_back(parse_select_item());

    if (!peek_keyword("FROM")) {
      if (at_end() || peek_symbol(";") || peek_symbol(")")) unsupported("SELECT without FROM");
      fail("expected FROM");
    }
    children.push_back(parse_from());

    if (peek_keyword("WHERE")) {
      std::string w = advance().text;
      subquery_depth_allowed_ = true;
      children.push_back(node(AstKind::Where, std::move(w), {parse_expr()}));
      subquery_depth_allowed_ = false;
    }
    if (peek_keyword("GROUP")) {
      std::string g = advance().text;
      g += " " + expect_keyword("BY");
      std::vector<Tree> keys;
      keys.push_back(parse_expr());
      while (accept_symbol(",")) keys.push_back(parse_expr());
      children.push_back(node(AstKind::GroupBy, std::move(g), std::move(keys)));
    }
    if (peek_keyword("HAVING")) {
      std::string h = advance().text;
      subquery_depth_allowed_ = true;
      children.push_back(node(AstKind::Having, std::move(h), {parse_expr()}));
      subquery_depth_allowed_ = false;
    }
    if (peek_keyword("ORDER")) {
      std::string o = advance().text;
      o += " " + expect_keyword("BY");
      std::vector<Tree> items;
      items.push_back(parse_order_item());
      while (accept_symbol(",")) items.push_back(parse_order_item());
      children.push_back(node(AstKind::OrderBy, std::move(o), std::move(items)));
    }
    if (peek_keyword("LIMIT")) {
      std::string l = advance().text;
      if (peek().type != TokenType::Number) fail("expected integer after LIMIT");
      std::string count = advance().text;
      if (count.find_first_not_of("0123456789") != std::string::npos) {
        fail("LIMIT expects an integer");
      }
      if (peek_symbol(",") || peek_keyword("OFFSET")) unsupported("OFFSET");
      children.push_back(node(AstKind::Limit, std::move(l), {leaf(AstKind::Literal, count)}));
    }
    check_trailing_unsupported();
    subquery_depth_allowed_ = outer_allowed;
    return node(AstKind::Select, std::move(kw), std::move(children));
  }

  Tree parse_select_item() {
    if (peek_symbol("*")) {
      advance();
      return leaf(AstKind::Star, "*");
    }
    if (is_identifier_token(peek()) && peek_symbol(".", 1) && peek_symbol("*", 2)) {
      std::string q = advance().text;
      advance();
      advance();
      return leaf(AstKind::Star, q + ".*");
    }
    Tree e = parse_expr();
    if (auto alias = parse_alias()) {
      return node(AstKind::Alias, std::move(*alias), {std::move(e)});
    }
    return e;
  }

  std::optional<std::string> parse_alias() {
    if (accept_keyword("AS")) {
      if (!is_identifier_token(peek()) && peek().type != TokenType::String) {
        fail("expected alias after AS");
      }
      return advance().text;
    }
    if (is_identifier_token(peek())) return advance().text;
    return std::nullopt;
  }

  Tree parse_order_item() {
    Tree e = parse_expr();
    if (peek_keyword("ASC") || peek_keyword("DESC")) {
      std::string dir = advance().text;
      if (peek_keyword("NULLS")) unsupported("NULLS FIRST/LAST");
      return node(AstKind::UnaryOp, std::move(dir), {std::move(e)});
    }
    if (peek_keyword("NULLS")) unsupported("NULLS FIRST/LAST");
    return e;
  }

  Tree parse_from() {
    std::string kw = expect_keyword("FROM");
    std::vector<Tree> children;
    children.push_back(parse_table_ref());
    while (true) {
      if (peek_symbol(",")) unsupported("comma join");
      for (auto kw2 : {"RIGHT", "FULL", "CROSS", "NATURAL"}) {
        if (peek_keyword(kw2)) unsupported(std::string(kw2) + " JOIN");
      }
      std::string join_text;
      if (peek_keyword("INNER")) {
        join_text = advance().text;
        join_text += " " + expect_keyword("JOIN");
      } else if (peek_keyword("LEFT")) {
        join_text = advance().text;
        if (peek_keyword("OUTER")) join_text += " " + advance().text;
        join_text += " " + expect_keyword("JOIN");
      } else if (peek_keyword("JOIN")) {
        join_text = advance().text;
      } else {
        break;
      }
      Tree ref = parse_table_ref();
      if (peek_keyword("USING")) unsupported("JOIN USING");
      if (!accept_keyword("ON")) fail("expected ON after JOIN");
      const bool saved = subquery_depth_allowed_;
      subquery_depth_allowed_ = false;
      Tree cond = parse_expr();
      subquery_depth_allowed_ = saved;
      children.push_back(node(AstKind::Join, std::move(join_text), {std::move(ref), std::move(cond)}));
    }
    return node(AstKind::From, std::move(kw), std::move(children));
  }

  Tree parse_table_ref() {
    if (peek_symbol("(")) {
      advance();
      if (!peek_keyword("SELECT")) fail("expected SELECT in derived table");
      const bool saved = subquery_depth_allowed_;
      Tree inner = parse_select();
      subquery_depth_allowed_ = saved;
      expect_symbol(")");
      auto alias = parse_alias();
      if (!alias) fail("derived table requires an alias");
      return node(AstKind::Alias, std::move(*alias),
                  {node(AstKind::Subquery, "", {std::move(inner)})});
    }
    if (!is_identifier_token(peek())) fail("expected table name");
    std::string name = advance().text;
    if (peek_symbol(".")) unsupported("schema-qualified table name");
    auto alias = parse_alias();
    const auto key = to_lower(unquote_identifier(name));
    for (const auto& [cte_name, body] : ctes_) {
      if (cte_name == key) {
        std::string used = alias ? *alias : name;
        return node(AstKind::Alias, std::move(used), {node(AstKind::Subquery, "", {body})});
      }
    }
    Tree t = leaf(AstKind::Table, std::move(name));
    if (alias) return node(AstKind::Alias, std::move(*alias), {std::move(t)});
    return t;
  }

  Tree parse_identifier_leaf(AstKind kind) {
    if (!is_identifier_token(peek())) fail("expected identifier");
    return leaf(kind, advance().text);
  }

  // ---- expressions -------------------------------------------------------
  Tree parse_expr() { return parse_or(); }

  Tree parse_or() {
    Tree lhs = parse_and();
    while (peek_keyword("OR")) {
      std::string op = advance().text;
      Tree rhs = parse_and();
      lhs = node(AstKind::BinaryOp, std::move(op), {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Tree parse_and() {
    Tree lhs = parse_not();
    while (peek_keyword("AND")) {
      std::string op = advance().text;
      Tree rhs = parse_not();
      lhs = node(AstKind::BinaryOp, std::move(op), {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Tree parse_not() {
    if (peek_keyword("NOT")) {
      if (peek_keyword("EXISTS", 1)) unsupported("EXISTS");
      std::string op = advance().text;
      return node(AstKind::UnaryOp, std::move(op), {parse_not()});
    }
    return parse_comparison();
  }

  Tree parse_comparison() {
    Tree lhs = parse_additive();
    while (true) {
      const Token& t = peek();
      if (t.type == TokenType::Symbol &&
          (t.text == "=" || t.text == "==" || t.text == "!=" || t.text == "<>" ||
           t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=")) {
        std::string op = advance().text;
        Tree rhs = parse_additive();
        lhs = node(AstKind::BinaryOp, std::move(op), {std::move(lhs), std::move(rhs)});
        continue;
      }
      if (peek_keyword("BETWEEN") || (peek_keyword("NOT") && peek_keyword("BETWEEN", 1))) {
        unsupported("BETWEEN");
      }
      if (peek_keyword("GLOB") || peek_keyword("REGEXP") || peek_keyword("MATCH")) {
        unsupported(to_upper(peek().text));
      }
      if (peek_keyword("LIKE") || (peek_keyword("NOT") && peek_keyword("LIKE", 1))) {
        std::string op = advance().text;
        if (!is_keyword(tokens_[pos_ - 1], "LIKE")) op += " " + advance().text;
        Tree rhs = parse_additive();
        if (peek_keyword("ESCAPE")) unsupported("LIKE ESCAPE");
        lhs = node(AstKind::BinaryOp, std::move(op), {std::move(lhs), std::move(rhs)});
        continue;
      }
      if (peek_keyword("IN") || (peek_keyword("NOT") && peek_keyword("IN", 1))) {
        std::string op = advance().text;
        if (!is_keyword(tokens_[pos_ - 1], "IN")) op += " " + advance().text;
        expect_symbol("(");
        if (!peek_keyword("SELECT")) unsupported("IN value list");
        if (!subquery_depth_allowed_) unsupported("subquery outside WHERE/HAVING");
        Tree inner = parse_select();
        subquery_depth_allowed_ = true;
        expect_symbol(")");
        lhs = node(AstKind::BinaryOp, std::move(op),
                   {std::move(lhs), node(AstKind::Subquery, "", {std::move(inner)})});
        continue;
      }
      if (peek_keyword("IS")) {
        std::string op = advance().text;
        if (peek_keyword("NOT")) op += " " + advance().text;
        op += " " + expect_keyword("NULL");
        lhs = node(AstKind::UnaryOp, std::move(op), {std::move(lhs)});
        continue;
      }
      return lhs;
    }
  }

  Tree parse_additive() {
    Tree lhs = parse_multiplicative();
    while (peek_symbol("+") || peek_symbol("-")) {
      std::string op = advance().text;
      Tree rhs = parse_multiplicative();
      lhs = node(AstKind::BinaryOp, std::move(op), {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Tree parse_multiplicative() {
    Tree lhs = parse_concat();
    while (peek_symbol("*") || peek_symbol("/") || peek_symbol("%")) {
      std::string op = advance().text;
      Tree rhs = parse_concat();
      lhs = node(AstKind::BinaryOp, std::move(op), {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Tree parse_concat() {
    Tree lhs = parse_unary();
    while (peek_symbol("||")) {
      std::string op = advance().text;
      Tree rhs = parse_unary();
      lhs = node(AstKind::BinaryOp, std::move(op), {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Tree parse_unary() {
    if (peek_symbol("-") || peek_symbol("+")) {
      std::string op = advance().text;
      return node(AstKind::UnaryOp, std::move(op), {parse_unary()});
    }
    return parse_primary();
  }

  Tree parse_primary() {
    const Token& t = peek();
    if (t.type == TokenType::Number || t.type == TokenType::String) {
      return leaf(AstKind::Literal, advance().text);
    }
    if (peek_keyword("NULL")) return leaf(AstKind::Literal, advance().text);
    if (peek_keyword("CASE")) unsupported("CASE expression");
    if (peek_keyword("EXISTS")) unsupported("EXISTS");
    if (peek_keyword("SELECT")) fail("subquery must be parenthesized");
    if (peek_symbol("(")) {
      advance();
      if (peek_keyword("SELECT")) {
        if (!subquery_depth_allowed_) unsupported("subquery outside WHERE/HAVING");
        Tree inner = parse_select();
        subquery_depth_allowed_ = true;
        expect_symbol(")");
        return node(AstKind::Subquery, "", {std::move(inner)});
      }
      Tree e = parse_expr();
      if (peek_symbol(",")) unsupported("row value");
      expect_symbol(")");
      return e;
    }
    if (t.type == TokenType::Ident && !detail::is_reserved_keyword(t.text) && peek_symbol("(", 1)) {
      if (iequals(t.text, "CAST")) unsupported("CAST");
      std::string name = advance().text;
      advance();  // (
      std::vector<Tree> args;
      if (peek_keyword("DISTINCT")) unsupported("DISTINCT aggregate");
      if (peek_symbol("*")) {
        advance();
        args.push_back(leaf(AstKind::Star, "*"));
      } else if (!peek_symbol(")")) {
        args.push_back(parse_expr());
        while (accept_symbol(",")) args.push_back(parse_expr());
      }
      expect_symbol(")");
      if (peek_keyword("OVER")) unsupported("window functions");
      if (args.empty() && is_aggregate_name(name)) fail("aggregate requires an argument");
      return node(AstKind::FuncCall, std::move(name), std::move(args));
    }
    if (is_identifier_token(t)) {
      std::string text = advance().text;
      if (peek_symbol(".")) {
        advance();
        if (!is_identifier_token(peek())) fail("expected column name after '.'");
        text += "." + advance().text;
        if (peek_symbol(".")) unsupported("schema-qualified column");
      }
      return leaf(AstKind::Column, std::move(text));
    }
    fail("expected expression");
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  bool subquery_depth_allowed_ = false;
  std::vector<std::pair<std::string, Tree>> ctes_;
};

void collect_aliases(const Tree& t, std::set<std::string>& out) {
  if (t.kind == AstKind::Alias) out.insert(to_lower(unquote_identifier(t.text)));
  for (const auto& c : t.children) collect_aliases(c, out);
}

void resolve_strict(const Tree& t, const Schema& schema, const std::set<std::string>& aliases) {
  if (t.kind == AstKind::Table) {
    if (schema.find_table(t.text) == nullptr) {
      throw UnknownIdentifier("unknown table: " + t.text);
    }
  } else if (t.kind == AstKind::Column) {
    const auto col = split_column_ref(t.text).column;
    const auto bare = unquote_identifier(col);
    if (!schema.any_table_has_column(bare) && aliases.count(to_lower(bare)) == 0) {
      throw UnknownIdentifier("unknown column: " + t.text);
    }
  }
  for (const auto& c : t.children) resolve_strict(c, schema, aliases);
}

}  // namespace

SqlAst parse(std::string_view sql_text, const Schema& schema, ParseOptions options) {
  if (sql_text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw SyntaxError("empty SQL text");
  }
  Parser p(sql_text);
  Tree tree = p.statement();
  if (options.strict_identifiers) {
    std::set<std::string> aliases;
    collect_aliases(tree, aliases);
    resolve_strict(tree, schema, aliases);
  }
  return SqlAst::from_tree(tree);
}

SqlAst parse_expression(std::string_view text) {
  Parser p(text);
  return SqlAst::from_tree(p.expression_only());
}

SqlAst parse_list(std::string_view text, ListForm form, std::string_view label) {
  Parser p(text);
  return SqlAst::from_tree(p.list_only(form, label));
}

SqlAst parse_table_name(std::string_view text) {
  Parser p(text);
  return SqlAst::from_tree(p.table_name_only());
}

}  // namespace sqlsv::sql
