#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sqlsv::sql {

struct TableSchema {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::string> types;  // empty or parallel to columns
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<TableSchema> tables, std::string dialect = "sqlite");

  const std::vector<TableSchema>& tables() const { return tables_; }
  const std::string& dialect() const { return dialect_; }

  // Case-insensitive lookup; identifiers may carry quotes.
  const TableSchema* find_table(std::string_view name) const;
  bool has_column(std::string_view table, std::string_view column) const;
  bool any_table_has_column(std::string_view column) const;

  static Schema from_json(const nlohmann::json& j);
  static Schema load(const std::string& path);
  nlohmann::json to_json() const;

 private:
  std::vector<TableSchema> tables_;
  std::string dialect_ = "sqlite";
};

// Strips surrounding `...`, "..." or [...] quoting from an identifier.
std::string unquote_identifier(std::string_view ident);
// Quotes an identifier with backticks when it is not a bare word.
std::string quote_identifier_if_needed(std::string_view ident);
struct ColumnRef {
  std::string qualifier;  // verbatim, possibly quoted; empty when unqualified
  std::string column;     // verbatim, possibly quoted
};
// Splits "q.col" on the first dot outside of identifier quotes.
ColumnRef split_column_ref(std::string_view text);

bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

}  // namespace sqlsv::sql
