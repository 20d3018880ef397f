#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "fixtures.hpp"
#include "sqlsv/augment/augment.hpp"
#include "sqlsv/errors.hpp"
#include "sqlsv/sql/parser.hpp"
#include "sqlsv/sql/render.hpp"

using namespace sqlsv;
using augment::Example;
using augment::MutationRule;
namespace fx = sqlsv::testing;

namespace {

sql::Schema company() { return fx::fixture_schema("company"); }

Example gold(std::string id, std::string db, std::string sql) {
  Example ex;
  ex.id = std::move(id);
  ex.db_id = std::move(db);
  ex.question = "q";
  ex.sql = std::move(sql);
  ex.label = 0;
  return ex;
}

augment::Corpus labeled(int valid, int invalid) {
  augment::Corpus c;
  for (int i = 0; i < valid + invalid; ++i) {
    auto ex = gold("e" + std::to_string(i), "company", "SELECT name FROM emp");
    ex.label = i < valid ? 0 : 1;
    c.push_back(ex);
  }
  return c;
}

int count_label(const augment::Corpus& c, int label) {
  return static_cast<int>(std::count_if(c.begin(), c.end(),
                                        [&](const Example& e) { return e.label == label; }));
}

}  // namespace

TEST(InvertOperator, FixedTable) {
  EXPECT_EQ(augment::invert_operator(">"), "<=");
  EXPECT_EQ(augment::invert_operator("<="), ">");
  EXPECT_EQ(augment::invert_operator("<"), ">=");
  EXPECT_EQ(augment::invert_operator(">="), "<");
  EXPECT_EQ(augment::invert_operator("="), "!=");
  EXPECT_EQ(augment::invert_operator("!="), "=");
  EXPECT_EQ(augment::invert_operator("AND"), "OR");
  EXPECT_EQ(augment::invert_operator("or"), "and");
  EXPECT_EQ(augment::invert_operator("+"), "");
}

TEST(Mutate, OperatorInversionExample) {
  const auto schema = company();
  const auto ast = sql::parse("SELECT name FROM emp WHERE age > 30", schema);
  const auto ms = augment::mutate(ast, MutationRule::OperatorInversion, schema, 1);
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_EQ(ms[0].sql, "SELECT name FROM emp WHERE age <= 30");
  EXPECT_EQ(ms[0].lp_node, 1);
  EXPECT_EQ(ast.node(ms[0].ast_node).text, ">");
}

TEST(Mutate, AggregationExampleIsSeedDetermined) {
  const auto schema = company();
  const auto ast = sql::parse("SELECT AVG(salary) FROM emp", schema);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto ms = augment::mutate(ast, MutationRule::AggregationMutation, schema, seed);
    ASSERT_EQ(ms.size(), 1u);
    const auto again = augment::mutate(ast, MutationRule::AggregationMutation, schema, seed);
    EXPECT_EQ(ms[0].sql, again[0].sql);
    seen.insert(ms[0].sql);
  }
  EXPECT_EQ(seen, (std::set<std::string>{"SELECT COUNT(salary) FROM emp", "SELECT SUM(salary) FROM emp",
                                         "SELECT MIN(salary) FROM emp", "SELECT MAX(salary) FROM emp"}));
}

TEST(Mutate, NoApplicableSite) {
  const sql::Schema none;
  const auto ast = sql::parse("SELECT a FROM t", none);
  EXPECT_THROW(augment::mutate(ast, MutationRule::OperatorInversion, none, 1), NoApplicableSite);
  EXPECT_THROW(augment::mutate(ast, MutationRule::ConstantReplacement, none, 1), NoApplicableSite);
  EXPECT_THROW(augment::mutate(sql::parse("SELECT COUNT(*) FROM emp", company()),
                               MutationRule::AggregationMutation, company(), 1),
               NoApplicableSite);
}

TEST(Mutate, IdentifierStaysInSchema) {
  const auto schema = company();
  const auto ast = sql::parse("SELECT name FROM emp WHERE age > 30", schema);
  const auto ms = augment::mutate(ast, MutationRule::IdentifierSubstitution, schema, 3);
  ASSERT_FALSE(ms.empty());
  for (const auto& m : ms) {
    sql::ParseOptions strict{true};
    EXPECT_NO_THROW(sql::parse(m.sql, schema, strict)) << m.sql;
  }
}

TEST(Mutate, ConstantsComeFromTheDatabase) {
  const auto schema = company();
  exec::Database db(fx::fixture_db("company"));
  const auto ast = sql::parse("SELECT name FROM dept WHERE city = 'Boston'", schema);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ms = augment::mutate(ast, MutationRule::ConstantReplacement, schema, seed, &db);
    ASSERT_EQ(ms.size(), 1u);
    const auto& s = ms[0].sql;
    EXPECT_TRUE(s.ends_with("'Seattle'") || s.ends_with("'Chicago'") || s.ends_with("'Denver'")) << s;
  }
  // without a database, integers step by one
  const auto num = sql::parse("SELECT name FROM emp WHERE age > 30", schema);
  const auto ms = augment::mutate(num, MutationRule::ConstantReplacement, schema, 1);
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_TRUE(ms[0].sql.ends_with("age > 31") || ms[0].sql.ends_with("age > 29")) << ms[0].sql;
}

// Each mutant changes one node's text and re-parses with the same shape.
TEST(MutateProperty, SingleEditAndReparse) {
  for (const auto& q : fx::fixture_queries()) {
    const auto schema = fx::fixture_schema(q.db_id);
    exec::Database db(fx::fixture_db(q.db_id));
    const auto ast = sql::parse(q.sql, schema);
    for (auto rule : augment::kAllRules) {
      std::vector<augment::Mutant> ms;
      try {
        ms = augment::mutate(ast, rule, schema, 2025, &db);
      } catch (const NoApplicableSite&) {
        continue;
      }
      for (const auto& m : ms) {
        const auto re = sql::parse(m.sql, schema);
        ASSERT_EQ(re.size(), ast.size()) << m.sql;
        int diffs = 0;
        for (std::size_t i = 0; i < re.size(); ++i) {
          EXPECT_EQ(re.node(static_cast<int>(i)).kind, ast.node(static_cast<int>(i)).kind);
          diffs += re.node(static_cast<int>(i)).text != ast.node(static_cast<int>(i)).text;
        }
        EXPECT_EQ(diffs, 1) << m.sql;
        EXPECT_NO_THROW(plan::lower(re, schema)) << m.sql;
      }
    }
  }
}

TEST(Negatives, KeptWhenResultChanges) {
  exec::Database db(fx::fixture_db("company"));
  const auto g = gold("g1", "company", "SELECT name FROM emp WHERE age > 30");
  augment::NegativeStats stats;
  const auto negs = augment::generate_negatives(g, db, company(), {MutationRule::OperatorInversion},
                                                8, 1, &stats);
  ASSERT_EQ(negs.size(), 1u);
  const auto& n = negs[0];
  EXPECT_EQ(n.sql, "SELECT name FROM emp WHERE age <= 30");
  EXPECT_EQ(n.label, 1);
  EXPECT_EQ(n.source, augment::Source::AstAug);
  EXPECT_TRUE(n.id.starts_with("g1:"));
  ASSERT_TRUE(n.sublabels.has_value());
  EXPECT_EQ(*n.sublabels, (std::map<int, int>{{0, 0}, {1, 1}, {2, 0}}));
  EXPECT_EQ(stats.candidates, 1);
  EXPECT_EQ(stats.kept, 1);
}

TEST(Negatives, DiscardedWhenResultCoincides) {
  const auto path = fx::scratch_dir() + "/coincide.sqlite";
  exec::create_database(path, "CREATE TABLE t (a INTEGER); INSERT INTO t VALUES (1), (5);");
  exec::Database db(path);
  const sql::Schema schema(std::vector<sql::TableSchema>{{"t", {"a"}, {}}});
  // a > 2 AND a > 3 selects {5}; the OR variant selects the same row.
  const auto g = gold("g", "tiny", "SELECT a FROM t WHERE a > 2 AND a > 3");
  augment::NegativeStats stats;
  const auto negs = augment::generate_negatives(g, db, schema, {MutationRule::OperatorInversion},
                                                8, 1, &stats);
  EXPECT_EQ(stats.candidates, 3);
  EXPECT_EQ(stats.same_result, 1);
  EXPECT_EQ(stats.kept, 2);
  for (const auto& n : negs) EXPECT_EQ(n.sql.find(" OR "), std::string::npos) << n.sql;
}

TEST(Negatives, BudgetAndDeterminism) {
  exec::Database db(fx::fixture_db("company"));
  const auto g = gold("g", "company",
                      "SELECT name, salary FROM emp WHERE age >= 30 AND salary < 80000");
  const std::vector<MutationRule> all(std::begin(augment::kAllRules), std::end(augment::kAllRules));
  const auto a = augment::generate_negatives(g, db, company(), all, 3, 7);
  const auto b = augment::generate_negatives(g, db, company(), all, 3, 7);
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a, b);
  for (const auto& n : a) {
    EXPECT_EQ(exec::label_by_execution(n.sql, g.sql, db), exec::Label::Invalid) << n.sql;
    int ones = 0;
    for (const auto& [lp, v] : *n.sublabels) ones += v;
    EXPECT_EQ(ones, 1);
  }
}

TEST(Negatives, GoldMustExecute) {
  exec::Database db(fx::fixture_db("company"));
  const auto g = gold("g", "company", "SELECT nickname FROM emp WHERE age > 30");
  EXPECT_THROW(augment::generate_negatives(g, db, company(), {MutationRule::OperatorInversion}, 8, 1),
               GoldExecutionError);
}

TEST(Balance, SubsamplesInvalid) {
  const auto out = augment::balance(labeled(10, 30), 1.0, 5);
  EXPECT_EQ(count_label(out, 0), 10);
  EXPECT_EQ(count_label(out, 1), 10);
  EXPECT_EQ(out, augment::balance(labeled(10, 30), 1.0, 5));
  EXPECT_NE(out, augment::balance(labeled(10, 30), 1.0, 6));
  EXPECT_TRUE(std::is_sorted(out.begin(), out.end(), [](const Example& a, const Example& b) {
    return std::stoi(a.id.substr(1)) < std::stoi(b.id.substr(1));
  }));
}

TEST(Balance, TooFewInvalidIsUnchangedWithWarning) {
  std::vector<std::string> warnings;
  const auto in = labeled(10, 8);
  EXPECT_EQ(augment::balance(in, 1.0, 5, &warnings), in);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Balance, Errors) {
  EXPECT_THROW(augment::balance(labeled(5, 0), 1.0, 1), SingleClassCorpus);
  EXPECT_THROW(augment::balance(labeled(0, 5), 1.0, 1), SingleClassCorpus);
  EXPECT_THROW(augment::balance(labeled(5, 5), 0.0, 1), InvalidArgument);
}

TEST(ChooseIndices, SortedDistinctDeterministic) {
  const auto a = augment::choose_indices(20, 7, 3);
  EXPECT_EQ(a.size(), 7u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  EXPECT_EQ(a, augment::choose_indices(20, 7, 3));
  EXPECT_EQ(augment::choose_indices(4, 10, 3).size(), 4u);
}

TEST(Jsonl, RoundTrip) {
  augment::Corpus c{gold("a", "company", "SELECT name FROM emp")};
  Example llm = gold("b", "company", "SELECT age FROM emp");
  llm.label.reset();
  llm.source = augment::Source::Llm;
  Example aug = gold("c", "company", "SELECT age FROM emp WHERE age <= 30");
  aug.label = 1;
  aug.source = augment::Source::AstAug;
  aug.sublabels = std::map<int, int>{{0, 0}, {1, 1}};
  c.push_back(llm);
  c.push_back(aug);
  std::stringstream ss;
  augment::write_jsonl(ss, c);
  EXPECT_EQ(augment::read_jsonl(ss, false), c);
  std::stringstream again;
  augment::write_jsonl(again, c);
  EXPECT_THROW(augment::read_jsonl(again, true), CorpusFormatError);
}

TEST(Jsonl, Validation) {
  const auto parse = [](const std::string& text) {
    std::stringstream ss(text);
    return augment::read_jsonl(ss, false);
  };
  const std::string ok = R"({"id":"a","db_id":"d","question":"q","sql":"SELECT 1","source":"gold","label":0})";
  EXPECT_EQ(parse(ok + "\n\n" + "").size(), 1u);
  EXPECT_THROW(parse(ok + "\n" + ok), CorpusFormatError);  // duplicate id
  EXPECT_THROW(parse(R"({"id":"a","db_id":"d","question":"q","sql":"S","source":"gold","label":2})"),
               CorpusFormatError);
  EXPECT_THROW(parse(R"({"id":"a","db_id":"d","question":"q","sql":"S","source":"gold","extra":1})"),
               CorpusFormatError);
  EXPECT_THROW(parse(R"({"id":"a","db_id":"d","question":"q","source":"gold"})"), CorpusFormatError);
  EXPECT_THROW(parse(R"({"id":"a","db_id":"d","question":"q","sql":"S","source":"gold","label":0,"sublabels":{"0":1}})"),
               CorpusFormatError);
  EXPECT_THROW(parse("{not json"), CorpusFormatError);
  try {
    parse(ok + "\n{broken");
    FAIL();
  } catch (const CorpusFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos) << e.what();
  }
}

TEST(SyntheticCorpus, LargeAndUnique) {
  const auto c = fx::synthetic_gold_corpus();
  EXPECT_GE(c.size(), 200u);
  std::set<std::pair<std::string, std::string>> pairs;
  std::set<std::string> dbs;
  for (const auto& ex : c) {
    pairs.emplace(ex.question, ex.sql);
    dbs.insert(ex.db_id);
  }
  EXPECT_EQ(pairs.size(), c.size());
  EXPECT_EQ(dbs.size(), 3u);
  EXPECT_NO_THROW(augment::validate_corpus(c, true));
}
