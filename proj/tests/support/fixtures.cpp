#include "fixtures.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "sqlsv/exec/exec.hpp"

#ifndef SQLSV_FIXTURE_DIR
#error "SQLSV_FIXTURE_DIR must be defined by the build"
#endif

namespace sqlsv::testing {

namespace fs = std::filesystem;

std::string fixture_dir() { return SQLSV_FIXTURE_DIR; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scratch_dir() {
  static const std::string dir = [] {
    auto p = fs::temp_directory_path() / ("sqlsv-test-" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
  }();
  return dir;
}

std::string fixture_db_dir() {
  static std::once_flag once;
  static std::string dir;
  std::call_once(once, [] {
    dir = (fs::path(scratch_dir()) / "db").string();
    fs::create_directories(dir);
    for (const auto& entry : fs::directory_iterator(fs::path(fixture_dir()) / "db")) {
      if (entry.path().extension() != ".sql") continue;
      const auto target = fs::path(dir) / (entry.path().stem().string() + ".sqlite");
      exec::create_database(target.string(), read_file(entry.path().string()));
    }
  });
  return dir;
}

std::string fixture_db(const std::string& db_id) {
  return (fs::path(fixture_db_dir()) / (db_id + ".sqlite")).string();
}

std::string fixture_schema_dir() { return (fs::path(fixture_dir()) / "schema").string(); }

sql::Schema fixture_schema(const std::string& db_id) {
  return sql::Schema::load((fs::path(fixture_schema_dir()) / (db_id + ".json")).string());
}

std::vector<FixtureQuery> fixture_queries() {
  const auto j = nlohmann::json::parse(read_file(fixture_dir() + "/queries.json"));
  std::vector<FixtureQuery> out;
  for (const auto& q : j) out.push_back({q.at("db_id"), q.at("sql")});
  return out;
}

// ---- synthetic corpus -----------------------------------------------------------

namespace {

struct NumCol {
  std::string col, word;
  std::vector<std::string> thresholds;
};
struct TextCol {
  std::string col, word;
  std::vector<std::string> values;
};
struct TableSpec {
  std::string db_id, table, entity, label;
  std::vector<NumCol> nums;
  std::vector<TextCol> texts;
  std::vector<std::string> groups;  // grouping columns (spelled as in the question)
};

struct Op {
  std::string sql, words;
};
const std::vector<Op> kOps = {
    {">", "greater than"}, {"<", "less than"}, {">=", "at least"}, {"<=", "at most"}};

struct Agg {
  std::string sql, words;
};
const std::vector<Agg> kAggs = {
    {"AVG", "average"}, {"MAX", "maximum"}, {"MIN", "minimum"}, {"SUM", "total sum of"}};

std::string words(const std::string& col) {
  std::string out = col;
  for (char& c : out) {
    if (c == '_') c = ' ';
  }
  return out;
}

class Builder {
 public:
  void add(const std::string& db_id, std::string question, std::string sql) {
    if (!seen_.insert(db_id + "\n" + question).second) return;
    augment::Example ex;
    ex.id = db_id + "-" + std::to_string(counter_++);
    ex.db_id = db_id;
    ex.question = std::move(question);
    ex.sql = std::move(sql);
    ex.label = 0;
    ex.source = augment::Source::Gold;
    corpus_.push_back(std::move(ex));
  }
  augment::Corpus take() { return std::move(corpus_); }

 private:
  augment::Corpus corpus_;
  std::set<std::string> seen_;
  int counter_ = 0;
};

void single_table(Builder& b, const TableSpec& t) {
  const auto& db = t.db_id;
  for (std::size_t ci = 0; ci < t.nums.size(); ++ci) {
    const auto& n = t.nums[ci];
    for (std::size_t ti = 0; ti < n.thresholds.size(); ++ti) {
      const auto& v = n.thresholds[ti];
      for (const auto& op : kOps) {
        b.add(db, "List the " + t.label + " of " + t.entity + " whose " + n.word + " is " + op.words + " " + v + ".",
              "SELECT " + t.label + " FROM " + t.table + " WHERE " + n.col + " " + op.sql + " " + v);
        b.add(db, "Count the number of " + t.entity + " whose " + n.word + " is " + op.words + " " + v + ".",
              "SELECT COUNT(*) FROM " + t.table + " WHERE " + n.col + " " + op.sql + " " + v);
      }
      for (std::size_t xi = 0; xi < t.texts.size(); ++xi) {
        const auto& tc = t.texts[xi];
        const auto& op = kOps[(ti + xi) % kOps.size()];
        for (std::size_t vi = 0; vi < tc.values.size(); ++vi) {
          if ((vi + ti) % 2 != 0) continue;
          const auto& tv = tc.values[vi];
          b.add(db, "List the " + t.label + " of " + t.entity + " whose " + n.word + " is " + op.words + " " + v + " and whose " + tc.word + " equals " + tv + ".",
                "SELECT " + t.label + " FROM " + t.table + " WHERE " + n.col + " " + op.sql + " " + v + " AND " + tc.col + " = '" + tv + "'");
        }
      }
    }
    for (const auto& agg : kAggs) {
      b.add(db, "What is the " + agg.words + " " + n.word + " of " + t.entity + "?",
            "SELECT " + agg.sql + "(" + n.col + ") FROM " + t.table);
    }
    for (std::size_t oi = 0; oi < t.nums.size(); ++oi) {
      if (oi == ci) continue;
      const auto& other = t.nums[oi];
      const auto& agg = kAggs[(ci + oi) % kAggs.size()];
      const auto& op = kOps[(ci + 2 * oi) % kOps.size()];
      const auto& v = other.thresholds[(ci + oi) % other.thresholds.size()];
      b.add(db, "What is the " + agg.words + " " + n.word + " of " + t.entity + " whose " + other.word + " is " + op.words + " " + v + "?",
            "SELECT " + agg.sql + "(" + n.col + ") FROM " + t.table + " WHERE " + other.col + " " + op.sql + " " + v);
    }
    for (const char* k : {"1", "3"}) {
      b.add(db, "Show the " + t.label + " of the top " + k + " " + t.entity + " by " + n.word + " in descending order.",
            "SELECT " + t.label + " FROM " + t.table + " ORDER BY " + n.col + " DESC LIMIT " + k);
      b.add(db, "Show the " + t.label + " of the bottom " + k + " " + t.entity + " by " + n.word + " in ascending order.",
            "SELECT " + t.label + " FROM " + t.table + " ORDER BY " + n.col + " ASC LIMIT " + k);
    }
    b.add(db, "List the " + t.label + " of " + t.entity + " whose " + n.word + " is greater than the average " + n.word + ".",
          "SELECT " + t.label + " FROM " + t.table + " WHERE " + n.col + " > (SELECT AVG(" + n.col + ") FROM " + t.table + ")");
    b.add(db, "List the " + t.label + " of " + t.entity + " whose " + n.word + " is less than the average " + n.word + ".",
          "SELECT " + t.label + " FROM " + t.table + " WHERE " + n.col + " < (SELECT AVG(" + n.col + ") FROM " + t.table + ")");
    for (std::size_t gi = 0; gi < t.groups.size(); ++gi) {
      const auto& g = t.groups[gi];
      const auto& agg = kAggs[(ci + gi) % kAggs.size()];
      b.add(db, "For each " + words(g) + ", what is the " + agg.words + " " + n.word + " of " + t.entity + "?",
            "SELECT " + g + ", " + agg.sql + "(" + n.col + ") FROM " + t.table + " GROUP BY " + g);
      const auto& v = n.thresholds[n.thresholds.size() / 2];
      b.add(db, "Which " + words(g) + " values have an average " + n.word + " greater than " + v + "?",
            "SELECT " + g + " FROM " + t.table + " GROUP BY " + g + " HAVING AVG(" + n.col + ") > " + v);
    }
  }
  for (const auto& tc : t.texts) {
    for (const auto& v : tc.values) {
      b.add(db, "List the " + t.label + " of " + t.entity + " whose " + tc.word + " equals " + v + ".",
            "SELECT " + t.label + " FROM " + t.table + " WHERE " + tc.col + " = '" + v + "'");
      b.add(db, "Count the number of " + t.entity + " whose " + tc.word + " equals " + v + ".",
            "SELECT COUNT(*) FROM " + t.table + " WHERE " + tc.col + " = '" + v + "'");
      for (std::size_t ci = 0; ci < t.nums.size(); ++ci) {
        const auto& n = t.nums[ci];
        for (const auto& agg : kAggs) {
          b.add(db, "What is the " + agg.words + " " + n.word + " of " + t.entity + " whose " + tc.word + " equals " + v + "?",
                "SELECT " + agg.sql + "(" + n.col + ") FROM " + t.table + " WHERE " + tc.col + " = '" + v + "'");
        }
        b.add(db, "Show the " + t.label + " of " + t.entity + " whose " + tc.word + " equals " + v + " by " + n.word + " in descending order.",
              "SELECT " + t.label + " FROM " + t.table + " WHERE " + tc.col + " = '" + v + "' ORDER BY " + n.col + " DESC");
      }
    }
  }
  for (const auto& g : t.groups) {
    b.add(db, "For each " + words(g) + ", count the number of " + t.entity + ".",
          "SELECT " + g + ", COUNT(*) FROM " + t.table + " GROUP BY " + g);
    b.add(db, "Which " + words(g) + " values have more than 2 " + t.entity + "?",
          "SELECT " + g + " FROM " + t.table + " GROUP BY " + g + " HAVING COUNT(*) > 2");
  }
}

void joins(Builder& b) {
  for (const char* city : {"Boston", "Seattle", "Chicago", "Denver"}) {
    b.add("company", std::string("List the name of employees whose department city equals ") + city + ".",
          std::string("SELECT e.name FROM emp AS e INNER JOIN dept AS d ON e.dept_id = d.id WHERE d.city = '") + city + "'");
  }
  for (const char* dept : {"Sales", "Engineering", "Marketing", "Finance", "Support"}) {
    b.add("company", std::string("What is the average salary of employees in the department named ") + dept + "?",
          std::string("SELECT AVG(e.salary) FROM emp AS e INNER JOIN dept AS d ON e.dept_id = d.id WHERE d.name = '") + dept + "'");
    b.add("company", std::string("What is the maximum age of employees in the department named ") + dept + "?",
          std::string("SELECT MAX(e.age) FROM emp AS e INNER JOIN dept AS d ON e.dept_id = d.id WHERE d.name = '") + dept + "'");
  }
  for (const char* v : {"60000", "80000"}) {
    b.add("company", std::string("List the department name of employees whose salary is greater than ") + v + ".",
          std::string("SELECT d.name FROM emp AS e INNER JOIN dept AS d ON e.dept_id = d.id WHERE e.salary > ") + v);
  }
  b.add("company", "For each department name, what is the total sum of salary of employees?",
        "SELECT d.name, SUM(e.salary) FROM emp AS e INNER JOIN dept AS d ON e.dept_id = d.id GROUP BY d.name");

  for (const char* v : {"70", "80", "90"}) {
    b.add("school", std::string("List the name of students with an enrollment score greater than ") + v + ".",
          std::string("SELECT s.name FROM student AS s INNER JOIN enrollment AS en ON en.student_id = s.id WHERE en.score > ") + v);
  }
  for (const char* title : {"Algebra", "Biology", "Chemistry", "Drama", "Geometry"}) {
    b.add("school", std::string("What is the average enrollment score in the course whose title equals ") + title + "?",
          std::string("SELECT AVG(en.score) FROM enrollment AS en INNER JOIN course AS c ON en.course_id = c.id WHERE c.title = '") + title + "'");
  }
  b.add("school", "For each course title, what is the maximum enrollment score?",
        "SELECT c.title, MAX(en.score) FROM enrollment AS en INNER JOIN course AS c ON en.course_id = c.id GROUP BY c.title");

  for (const char* cat : {"Electronics", "Furniture", "Books", "Kitchen"}) {
    b.add("store", std::string("List the name of customers who ordered products whose category equals ") + cat + ".",
          std::string("SELECT cu.name FROM customer AS cu INNER JOIN orders AS o ON o.customer_id = cu.id INNER JOIN product AS p ON o.product_id = p.id WHERE p.category = '") + cat + "'");
  }
  for (const char* city : {"Portland", "Denver", "Miami"}) {
    b.add("store", std::string("What is the total sum of order total for customers whose city equals ") + city + "?",
          std::string("SELECT SUM(o.total) FROM orders AS o INNER JOIN customer AS cu ON o.customer_id = cu.id WHERE cu.city = '") + city + "'");
  }
}

}  // namespace

augment::Corpus synthetic_gold_corpus() {
  const std::vector<TableSpec> specs = {
      {"company", "emp", "employees", "name",
       {{"age", "age", {"25", "30", "35", "40", "45", "50"}},
        {"salary", "salary", {"50000", "60000", "70000", "80000", "90000"}},
        {"hire_year", "hire year", {"2010", "2014", "2018"}}},
       {{"title", "title", {"Manager", "Associate", "Engineer", "Director", "Analyst"}}},
       {"title"}},
      {"company", "dept", "departments", "name",
       {{"budget", "budget", {"250000", "450000", "800000"}}},
       {{"city", "city", {"Boston", "Chicago", "Seattle"}}},
       {"city"}},
      {"school", "student", "students", "name",
       {{"age", "age", {"14", "15", "16", "17"}},
        {"grade", "grade", {"9", "10", "11"}},
        {"gpa", "gpa", {"2.5", "3.0", "3.5"}}},
       {{"city", "city", {"Austin", "Dallas", "Houston"}}},
       {"city", "grade"}},
      {"school", "course", "courses", "title",
       {{"credits", "credits", {"2", "3", "4"}}},
       {{"dept", "dept", {"Math", "Science", "Arts"}}},
       {"dept"}},
      {"store", "product", "products", "name",
       {{"price", "price", {"50", "100", "300", "900"}}, {"stock", "stock", {"10", "20", "40"}}},
       {{"category", "category", {"Electronics", "Furniture", "Books", "Kitchen"}}},
       {"category"}},
      {"store", "customer", "customers", "name",
       {{"age", "age", {"30", "35", "40", "45"}}},
       {{"city", "city", {"Portland", "Denver", "Miami"}}},
       {"city"}},
      {"store", "orders", "orders", "id",
       {{"quantity", "quantity", {"1", "2", "3"}},
        {"total", "total", {"100", "300", "1000"}},
        {"year", "year", {"2021", "2022", "2023"}}},
       {},
       {"year"}},
  };
  Builder b;
  for (const auto& t : specs) single_table(b, t);
  joins(b);
  return b.take();
}

}  // namespace sqlsv::testing
