#pragma once

#include <string>
#include <vector>

#include "sqlsv/augment/augment.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::testing {

// Source tree fixture directory (tests/fixtures).
std::string fixture_dir();

// Fresh per-process scratch directory under the system temp dir.
std::string scratch_dir();

// Builds <scratch>/db/<db_id>.sqlite from the seed scripts once per process
// and returns the directory.
std::string fixture_db_dir();
std::string fixture_db(const std::string& db_id);
std::string fixture_schema_dir();
sql::Schema fixture_schema(const std::string& db_id);

struct FixtureQuery {
  std::string db_id;
  std::string sql;
};
std::vector<FixtureQuery> fixture_queries();

std::string read_file(const std::string& path);

// Templated question/SQL gold pairs over the company, school and store
// databases. Deterministic; every pair is distinct.
augment::Corpus synthetic_gold_corpus();

}  // namespace sqlsv::testing
