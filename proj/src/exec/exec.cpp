#include "sqlsv/exec/exec.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sql/lexer.hpp"
#include "sqlsv/errors.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::exec {

namespace {

constexpr double kRealTolerance = 1e-6;

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

int progress_callback(void* arg) {
  auto* d = static_cast<Deadline*>(arg);
  if (std::chrono::steady_clock::now() >= d->at) {
    d->expired = true;
    return 1;
  }
  return 0;
}

struct StmtGuard {
  sqlite3_stmt* stmt = nullptr;
  ~StmtGuard() { sqlite3_finalize(stmt); }
};

// Total order on cells for sorting multisets: null < numbers < text.
int type_rank(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return 0;
  if (std::holds_alternative<std::string>(c)) return 2;
  return 1;
}

double as_double(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  return std::get<double>(c);
}

bool cell_less(const Cell& a, const Cell& b) {
  const int ra = type_rank(a), rb = type_rank(b);
  if (ra != rb) return ra < rb;
  if (ra == 1) return as_double(a) < as_double(b);
  if (ra == 2) return std::get<std::string>(a) < std::get<std::string>(b);
  return false;
}

bool row_less(const Row& a, const Row& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), cell_less);
}

bool rows_equal(const Row& a, const Row& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), cells_equal);
}

}  // namespace

Database::Database(const std::string& path) : path_(path) {
  const int rc = sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX,
                                 nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = db_ != nullptr ? sqlite3_errmsg(db_) : sqlite3_errstr(rc);
    sqlite3_close(db_);
    db_ = nullptr;
    throw ExecError("cannot open database " + path + ": " + msg);
  }
}

Database::~Database() { sqlite3_close(db_); }

Database::Database(Database&& other) noexcept : db_(other.db_), path_(std::move(other.path_)) {
  other.db_ = nullptr;
}

Database& Database::operator=(Database&& other) noexcept {
  if (this != &other) {
    sqlite3_close(db_);
    db_ = other.db_;
    path_ = std::move(other.path_);
    other.db_ = nullptr;
  }
  return *this;
}

ResultTable Database::execute(std::string_view sql, int timeout_ms) const {
  StmtGuard guard;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &guard.stmt, &tail);
  if (rc != SQLITE_OK) throw ExecError(sqlite3_errmsg(db_));
  if (guard.stmt == nullptr) throw ExecError("empty statement");
  if (!sqlite3_stmt_readonly(guard.stmt)) throw ExecError("only read-only statements may run");

  Deadline deadline{std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms)};
  sqlite3_progress_handler(db_, 1000, progress_callback, &deadline);
  struct HandlerReset {
    sqlite3* db;
    ~HandlerReset() { sqlite3_progress_handler(db, 0, nullptr, nullptr); }
  } reset{db_};

  ResultTable out;
  out.columns = sqlite3_column_count(guard.stmt);
  out.ordered = has_top_level_order_by(sql);
  while ((rc = sqlite3_step(guard.stmt)) == SQLITE_ROW) {
    Row row;
    row.reserve(static_cast<std::size_t>(out.columns));
    for (int i = 0; i < out.columns; ++i) {
      switch (sqlite3_column_type(guard.stmt, i)) {
        case SQLITE_NULL:
          row.emplace_back(std::monostate{});
          break;
        case SQLITE_INTEGER:
          row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(guard.stmt, i)));
          break;
        case SQLITE_FLOAT:
          row.emplace_back(sqlite3_column_double(guard.stmt, i));
          break;
        default: {
          const auto* p = sqlite3_column_text(guard.stmt, i);
          const int len = sqlite3_column_bytes(guard.stmt, i);
          row.emplace_back(std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(len)));
        }
      }
    }
    out.rows.push_back(std::move(row));
  }
  if (rc != SQLITE_DONE) {
    if (deadline.expired) {
      throw Timeout("query exceeded " + std::to_string(timeout_ms) + " ms");
    }
    throw ExecError(sqlite3_errmsg(db_));
  }
  return out;
}

std::vector<Cell> Database::distinct_values(const std::string& table, const std::string& column,
                                            int limit) const {
  const auto q = "SELECT DISTINCT " + sql::quote_identifier_if_needed(sql::unquote_identifier(column)) +
                 " FROM " + sql::quote_identifier_if_needed(sql::unquote_identifier(table)) +
                 " WHERE " + sql::quote_identifier_if_needed(sql::unquote_identifier(column)) +
                 " IS NOT NULL ORDER BY 1 LIMIT " + std::to_string(limit);
  std::vector<Cell> out;
  for (auto& r : execute(q).rows) out.push_back(std::move(r.at(0)));
  return out;
}

ResultTable execute(const std::string& db_path, std::string_view sql, int timeout_ms) {
  return Database(db_path).execute(sql, timeout_ms);
}

bool has_top_level_order_by(std::string_view sql) {
  std::vector<sql::detail::Token> tokens;
  try {
    tokens = sql::detail::tokenize(sql);
  } catch (const SyntaxError&) {
    return false;
  }
  int depth = 0;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.type == sql::detail::TokenType::Symbol) {
      if (t.text == "(") ++depth;
      else if (t.text == ")") --depth;
    } else if (depth == 0 && t.type == sql::detail::TokenType::Ident &&
               sql::iequals(t.text, "ORDER") &&
               tokens[i + 1].type == sql::detail::TokenType::Ident &&
               sql::iequals(tokens[i + 1].text, "BY")) {
      return true;
    }
  }
  return false;
}

bool cells_equal(const Cell& a, const Cell& b) {
  const int ra = type_rank(a), rb = type_rank(b);
  if (ra != rb) return false;
  if (ra == 0) return true;
  if (ra == 2) return std::get<std::string>(a) == std::get<std::string>(b);
  const auto* ia = std::get_if<std::int64_t>(&a);
  const auto* ib = std::get_if<std::int64_t>(&b);
  if (ia != nullptr && ib != nullptr) return *ia == *ib;
  const double x = as_double(a), y = as_double(b);
  return std::abs(x - y) <= kRealTolerance * std::max({1.0, std::abs(x), std::abs(y)});
}

bool results_equal(const ResultTable& a, const ResultTable& b) {
  if (a.columns != b.columns || a.rows.size() != b.rows.size()) return false;
  if (a.ordered || b.ordered) {
    return std::equal(a.rows.begin(), a.rows.end(), b.rows.begin(), rows_equal);
  }
  auto sa = a.rows;
  auto sb = b.rows;
  std::sort(sa.begin(), sa.end(), row_less);
  std::sort(sb.begin(), sb.end(), row_less);
  return std::equal(sa.begin(), sa.end(), sb.begin(), rows_equal);
}

Label label_by_execution(std::string_view candidate, std::string_view gold, const Database& db,
                         int timeout_ms) {
  ResultTable gold_result;
  try {
    gold_result = db.execute(gold, timeout_ms);
  } catch (const Error& e) {
    throw GoldExecutionError(std::string("gold query failed: ") + e.what());
  }
  ResultTable cand;
  try {
    cand = db.execute(candidate, timeout_ms);
  } catch (const ExecError&) {
    return Label::Unlabelable;
  } catch (const Timeout&) {
    return Label::Unlabelable;
  }
  return results_equal(cand, gold_result) ? Label::Valid : Label::Invalid;
}

void create_database(const std::string& path, const std::string& script) {
  std::remove(path.c_str());
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(path.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) !=
      SQLITE_OK) {
    std::string msg = db != nullptr ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw ExecError("cannot create database " + path + ": " + msg);
  }
  char* err = nullptr;
  const int rc = sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err);
  std::string msg = err != nullptr ? err : "";
  sqlite3_free(err);
  sqlite3_close(db);
  if (rc != SQLITE_OK) throw ExecError("seed script failed for " + path + ": " + msg);
}

std::string cell_to_string(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return "NULL";
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) {
    std::ostringstream os;
    os.precision(17);
    os << *d;
    return os.str();
  }
  return std::get<std::string>(c);
}

}  // namespace sqlsv::exec
