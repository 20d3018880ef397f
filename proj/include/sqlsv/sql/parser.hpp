#pragma once

#include <string_view>

#include "sqlsv/sql/ast.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::sql {

struct ParseOptions {
  // Reject identifiers that do not resolve against the schema.
  bool strict_identifiers = false;
};

// Parses one SELECT statement of the supported subset. Throws SyntaxError,
// UnsupportedConstruct, or (strict mode only) UnknownIdentifier.
SqlAst parse(std::string_view sql_text, const Schema& schema, ParseOptions options = {});

// Parses a standalone scalar expression (may contain subqueries).
SqlAst parse_expression(std::string_view text);

enum class ListForm {
  SelectItems,  // expressions with optional aliases, stars allowed
  OrderItems,   // expressions with optional ASC/DESC
  Aggregate,    // [aggregate calls] [GROUP BY keys]
};

// Parses a list-valued plan attribute under a List root whose text is `label`.
SqlAst parse_list(std::string_view text, ListForm form, std::string_view label);

// Parses a single table name into a Table leaf.
SqlAst parse_table_name(std::string_view text);

}  // namespace sqlsv::sql
