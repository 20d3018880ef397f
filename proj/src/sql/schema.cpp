#include "sqlsv/sql/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "sqlsv/errors.hpp"

namespace sqlsv::sql {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

std::string unquote_identifier(std::string_view ident) {
  if (ident.size() >= 2) {
    const char open = ident.front();
    const char close = ident.back();
    if ((open == '`' && close == '`') || (open == '"' && close == '"') ||
        (open == '[' && close == ']')) {
      return std::string(ident.substr(1, ident.size() - 2));
    }
  }
  return std::string(ident);
}

std::string quote_identifier_if_needed(std::string_view ident) {
  const bool bare =
      !ident.empty() && (std::isalpha(static_cast<unsigned char>(ident[0])) || ident[0] == '_') &&
      std::all_of(ident.begin(), ident.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
      });
  if (bare) return std::string(ident);
  return "`" + std::string(ident) + "`";
}

ColumnRef split_column_ref(std::string_view text) {
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote != 0) {
      if (c == quote) quote = 0;
    } else if (c == '`' || c == '"') {
      quote = c;
    } else if (c == '[') {
      quote = ']';
    } else if (c == '.') {
      return {std::string(text.substr(0, i)), std::string(text.substr(i + 1))};
    }
  }
  return {"", std::string(text)};
}

Schema::Schema(std::vector<TableSchema> tables, std::string dialect)
    : tables_(std::move(tables)), dialect_(std::move(dialect)) {
  std::set<std::string> names;
  for (const auto& t : tables_) {
    if (!names.insert(to_lower(t.name)).second) {
      throw SchemaError("duplicate table name: " + t.name);
    }
    std::set<std::string> cols;
    for (const auto& c : t.columns) {
      if (!cols.insert(to_lower(c)).second) {
        throw SchemaError("duplicate column " + c + " in table " + t.name);
      }
    }
    if (!t.types.empty() && t.types.size() != t.columns.size()) {
      throw SchemaError("types/columns length mismatch in table " + t.name);
    }
  }
}

const TableSchema* Schema::find_table(std::string_view name) const {
  const auto bare = unquote_identifier(name);
  for (const auto& t : tables_) {
    if (iequals(t.name, bare)) return &t;
  }
  return nullptr;
}

bool Schema::has_column(std::string_view table, std::string_view column) const {
  const auto* t = find_table(table);
  if (t == nullptr) return false;
  const auto bare = unquote_identifier(column);
  return std::any_of(t->columns.begin(), t->columns.end(),
                     [&](const std::string& c) { return iequals(c, bare); });
}

bool Schema::any_table_has_column(std::string_view column) const {
  return std::any_of(tables_.begin(), tables_.end(),
                     [&](const TableSchema& t) { return has_column(t.name, column); });
}

Schema Schema::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tables") || !j.at("tables").is_array()) {
    throw SchemaError("schema JSON must be an object with a \"tables\" array");
  }
  std::vector<TableSchema> tables;
  for (const auto& t : j.at("tables")) {
    TableSchema ts;
    try {
      ts.name = t.at("name").get<std::string>();
      ts.columns = t.at("columns").get<std::vector<std::string>>();
      if (t.contains("types")) ts.types = t.at("types").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("malformed table entry: ") + e.what());
    }
    tables.push_back(std::move(ts));
  }
  std::string dialect = j.value("dialect", std::string("sqlite"));
  return Schema(std::move(tables), std::move(dialect));
}

Schema Schema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("invalid schema JSON in " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json Schema::to_json() const {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : tables_) {
    nlohmann::json jt{{"name", t.name}, {"columns", t.columns}};
    if (!t.types.empty()) jt["types"] = t.types;
    tables.push_back(std::move(jt));
  }
  return {{"tables", tables}, {"dialect", dialect_}};
}

}  // namespace sqlsv::sql
