#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;

namespace sqlsv::exec {

using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;
using Row = std::vector<Cell>;

struct ResultTable {
  int columns = 0;
  std::vector<Row> rows;
  bool ordered = false;  // statement had a top-level ORDER BY
};

inline constexpr int kDefaultTimeoutMs = 5000;

// Read-only SQLite connection. Not shareable across threads; open one per thread.
class Database {
 public:
  explicit Database(const std::string& path);  // throws ExecError
  ~Database();
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;
  Database(Database&& other) noexcept;
  Database& operator=(Database&& other) noexcept;

  // Runs one statement. Throws ExecError (engine message) or Timeout.
  ResultTable execute(std::string_view sql, int timeout_ms = kDefaultTimeoutMs) const;

  // Distinct non-null values of table.column, in ascending order.
  std::vector<Cell> distinct_values(const std::string& table, const std::string& column,
                                    int limit = 200) const;

  const std::string& path() const { return path_; }

 private:
  sqlite3* db_ = nullptr;
  std::string path_;
};

ResultTable execute(const std::string& db_path, std::string_view sql,
                    int timeout_ms = kDefaultTimeoutMs);

// True when ORDER BY appears outside every parenthesis (and literal).
bool has_top_level_order_by(std::string_view sql);

// Sequence equality if either side is ordered, multiset equality otherwise.
// Reals (and int/real pairs) match within 1e-6 relative tolerance.
bool results_equal(const ResultTable& a, const ResultTable& b);
bool cells_equal(const Cell& a, const Cell& b);

enum class Label { Valid = 0, Invalid = 1, Unlabelable = 2 };

// Throws GoldExecutionError when the gold query fails. A candidate that fails
// to execute (error or timeout) is Unlabelable.
Label label_by_execution(std::string_view candidate, std::string_view gold, const Database& db,
                         int timeout_ms = kDefaultTimeoutMs);

// Builds a database file from a SQL script (fixtures). Overwrites `path`.
void create_database(const std::string& path, const std::string& script);

std::string cell_to_string(const Cell& c);

}  // namespace sqlsv::exec
