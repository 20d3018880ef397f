#include "sqlsv/augment/augment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "sqlsv/errors.hpp"
#include "sqlsv/sql/parser.hpp"
#include "sqlsv/sql/render.hpp"

namespace sqlsv::augment {

namespace {

using sql::AstKind;
using sql::NodeId;
using sql::SqlAst;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
const T& pick(const std::vector<T>& pool, std::mt19937_64& rng) {
  const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pool.size()));
  return pool[std::min(i, pool.size() - 1)];
}

// ---- scope resolution -------------------------------------------------------

struct ScopeEntry {
  std::string alias;                // empty when the table is not aliased
  const sql::TableSchema* table;    // null for derived tables
};

class Scopes {
 public:
  Scopes(const SqlAst& ast, const sql::Schema& schema)
      : ast_(ast), schema_(schema), parents_(ast.parents()) {}

  // Scopes of every enclosing Select, innermost first.
  std::vector<std::vector<ScopeEntry>> at(NodeId id) const {
    std::vector<std::vector<ScopeEntry>> out;
    for (NodeId cur = id; cur >= 0; cur = parents_[static_cast<std::size_t>(cur)]) {
      if (ast_.node(cur).kind == AstKind::Select) out.push_back(select_scope(cur));
    }
    return out;
  }

  const sql::TableSchema* resolve_column(NodeId column) const {
    const auto ref = sql::split_column_ref(ast_.node(column).text);
    for (const auto& scope : at(column)) {
      for (const auto& e : scope) {
        if (e.table == nullptr) continue;
        if (!ref.qualifier.empty()) {
          const auto q = sql::unquote_identifier(ref.qualifier);
          const bool match = e.alias.empty() ? sql::iequals(q, e.table->name)
                                             : sql::iequals(q, e.alias);
          if (match) return schema_.has_column(e.table->name, ref.column) ? e.table : nullptr;
        } else if (schema_.has_column(e.table->name, ref.column)) {
          return e.table;
        }
      }
    }
    return nullptr;
  }

  NodeId parent(NodeId id) const { return parents_[static_cast<std::size_t>(id)]; }

 private:
  std::vector<ScopeEntry> select_scope(NodeId select) const {
    std::vector<ScopeEntry> out;
    for (NodeId c : ast_.node(select).children) {
      const auto& from = ast_.node(c);
      if (from.kind != AstKind::From) continue;
      for (NodeId item : from.children) {
        NodeId ref = item;
        if (ast_.node(item).kind == AstKind::Join) ref = ast_.node(item).children.at(0);
        const auto& r = ast_.node(ref);
        if (r.kind == AstKind::Table) {
          out.push_back({"", schema_.find_table(r.text)});
        } else if (r.kind == AstKind::Alias) {
          const auto& inner = ast_.node(r.children.at(0));
          out.push_back({r.text, inner.kind == AstKind::Table ? schema_.find_table(inner.text)
                                                              : nullptr});
        }
      }
    }
    return out;
  }

  const SqlAst& ast_;
  const sql::Schema& schema_;
  std::vector<NodeId> parents_;
};

// ---- literal helpers ----------------------------------------------------------

enum class LiteralType { Integer, Real, Text, Other };

LiteralType literal_type(const std::string& text) {
  if (text.size() >= 2 && text.front() == '\'' && text.back() == '\'') return LiteralType::Text;
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
  if (ec == std::errc() && p == text.data() + text.size()) return LiteralType::Integer;
  double d = 0.0;
  auto [p2, ec2] = std::from_chars(text.data(), text.data() + text.size(), d);
  if (ec2 == std::errc() && p2 == text.data() + text.size()) return LiteralType::Real;
  return LiteralType::Other;
}

std::string quote_text(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    out += c;
    if (c == '\'') out += '\'';
  }
  return out + "'";
}

std::string unquote_text(const std::string& lit) {
  std::string out;
  for (std::size_t i = 1; i + 1 < lit.size(); ++i) {
    out += lit[i];
    if (lit[i] == '\'' && i + 2 < lit.size() && lit[i + 1] == '\'') ++i;
  }
  return out;
}

std::string format_real(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, p);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string cell_literal(const exec::Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  if (const auto* s = std::get_if<std::string>(&c)) return quote_text(*s);
  return "";
}

bool same_constant(const std::string& a, const std::string& b) {
  const auto ta = literal_type(a), tb = literal_type(b);
  if (ta == LiteralType::Text || tb == LiteralType::Text) return a == b;
  if (ta == LiteralType::Other || tb == LiteralType::Other) return a == b;
  return std::stod(a) == std::stod(b);
}

std::string match_case(const std::string& like, std::string word) {
  const bool lower = std::none_of(like.begin(), like.end(),
                                  [](unsigned char c) { return std::isupper(c) != 0; });
  const bool upper = std::none_of(like.begin(), like.end(),
                                  [](unsigned char c) { return std::islower(c) != 0; });
  if (lower) return sql::to_lower(word);
  if (upper) return sql::to_upper(word);
  word = sql::to_lower(word);
  word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

// ---- per-rule site rewrites ---------------------------------------------------

class Mutator {
 public:
  Mutator(const SqlAst& ast, const sql::Schema& schema, const exec::Database* db,
          std::uint64_t seed)
      : ast_(ast), schema_(schema), db_(db), scopes_(ast, schema), rng_(seed) {
    for (const auto& n : ast.nodes()) {
      if (n.kind == AstKind::Literal && literal_type(n.text) == LiteralType::Text) {
        string_pool_.insert(n.text);
      }
    }
  }

  // New text for the site, or nullopt when the node is not a site of `rule`.
  // Sites that exist but have no alternative yield an empty string.
  std::optional<std::string> rewrite(MutationRule rule, NodeId id) {
    const auto& n = ast_.node(id);
    switch (rule) {
      case MutationRule::OperatorInversion:
        if (n.kind != AstKind::BinaryOp) return std::nullopt;
        if (auto inv = invert_operator(n.text); !inv.empty()) return inv;
        return std::nullopt;
      case MutationRule::IdentifierSubstitution:
        if (n.kind == AstKind::Column) return substitute_column(id);
        if (n.kind == AstKind::Table) return substitute_table(n.text);
        return std::nullopt;
      case MutationRule::ConstantReplacement:
        if (n.kind != AstKind::Literal || literal_type(n.text) == LiteralType::Other) {
          return std::nullopt;
        }
        return replace_constant(id);
      case MutationRule::AggregationMutation: {
        if (n.kind != AstKind::FuncCall || !sql::is_aggregate_name(n.text)) return std::nullopt;
        if (n.children.size() == 1 && ast_.node(n.children[0]).kind == AstKind::Star) {
          return std::nullopt;  // COUNT(*) has no same-argument alternative
        }
        std::vector<std::string> pool;
        for (const char* f : {"COUNT", "SUM", "AVG", "MIN", "MAX"}) {
          if (!sql::iequals(f, n.text)) pool.emplace_back(f);
        }
        return match_case(n.text, pick(pool, rng_));
      }
    }
    return std::nullopt;
  }

 private:
  std::string substitute_column(NodeId id) {
    const auto ref = sql::split_column_ref(ast_.node(id).text);
    const auto current = sql::unquote_identifier(ref.column);
    std::vector<std::string> pool;
    if (!ref.qualifier.empty()) {
      const auto* t = scopes_.resolve_column(id);
      if (t == nullptr) return "";
      for (const auto& c : t->columns) {
        if (!sql::iequals(c, current)) pool.push_back(c);
      }
    } else {
      std::set<std::string> seen;
      const auto scopes = scopes_.at(id);
      if (scopes.empty()) return "";
      if (scopes_.resolve_column(id) == nullptr) return "";  // e.g. an output alias
      for (const auto& e : scopes.front()) {
        if (e.table == nullptr) continue;
        for (const auto& c : e.table->columns) {
          if (!sql::iequals(c, current) && seen.insert(sql::to_lower(c)).second) pool.push_back(c);
        }
      }
    }
    if (pool.empty()) return "";
    auto col = sql::quote_identifier_if_needed(pick(pool, rng_));
    return ref.qualifier.empty() ? col : ref.qualifier + "." + col;
  }

  std::string substitute_table(const std::string& current) {
    std::vector<std::string> pool;
    for (const auto& t : schema_.tables()) {
      if (!sql::iequals(t.name, sql::unquote_identifier(current))) pool.push_back(t.name);
    }
    if (pool.empty()) return "";
    return sql::quote_identifier_if_needed(pick(pool, rng_));
  }

  // Column compared against the literal, if any.
  const sql::TableSchema* compared_column(NodeId literal, std::string& column) const {
    const NodeId p = scopes_.parent(literal);
    if (p < 0 || ast_.node(p).kind != AstKind::BinaryOp) return nullptr;
    for (NodeId c : ast_.node(p).children) {
      if (c != literal && ast_.node(c).kind == AstKind::Column) {
        const auto* t = scopes_.resolve_column(c);
        if (t != nullptr) column = sql::unquote_identifier(sql::split_column_ref(ast_.node(c).text).column);
        return t;
      }
    }
    return nullptr;
  }

  std::string replace_constant(NodeId id) {
    const auto& text = ast_.node(id).text;
    const auto type = literal_type(text);
    const NodeId p = scopes_.parent(id);
    const bool in_limit = p >= 0 && ast_.node(p).kind == AstKind::Limit;

    if (db_ != nullptr && !in_limit) {
      std::string column;
      if (const auto* t = compared_column(id, column)) {
        std::vector<std::string> pool;
        try {
          for (const auto& v : db_->distinct_values(t->name, column)) {
            auto lit = cell_literal(v);
            if (!lit.empty() && !same_constant(lit, text)) pool.push_back(std::move(lit));
          }
        } catch (const Error&) {
          pool.clear();
        }
        if (!pool.empty()) return pick(pool, rng_);
      }
    }
    // Fallbacks keep the rule total.
    const bool up = uniform01(rng_) < 0.5;
    if (type == LiteralType::Integer) {
      const auto v = std::stoll(text);
      return std::to_string(up || (in_limit && v <= 0) ? v + 1 : v - 1);
    }
    if (type == LiteralType::Real) return format_real(std::stod(text) + (up ? 1.0 : -1.0));
    std::vector<std::string> pool;
    for (const auto& s : string_pool_) {
      if (s != text) pool.push_back(s);
    }
    if (!pool.empty()) return pick(pool, rng_);
    return quote_text(unquote_text(text) + "x");
  }

  const SqlAst& ast_;
  const sql::Schema& schema_;
  const exec::Database* db_;
  Scopes scopes_;
  std::mt19937_64 rng_;
  std::set<std::string> string_pool_;
};

}  // namespace

// ---- names --------------------------------------------------------------------

std::string_view source_name(Source s) {
  switch (s) {
    case Source::Gold: return "gold";
    case Source::Llm: return "llm";
    case Source::AstAug: return "ast-aug";
  }
  return "gold";
}

Source source_from_name(std::string_view name) {
  if (name == "gold") return Source::Gold;
  if (name == "llm") return Source::Llm;
  if (name == "ast-aug") return Source::AstAug;
  throw CorpusFormatError("unknown source: " + std::string(name));
}

std::string_view rule_name(MutationRule r) {
  switch (r) {
    case MutationRule::OperatorInversion: return "operator-inversion";
    case MutationRule::IdentifierSubstitution: return "identifier-substitution";
    case MutationRule::ConstantReplacement: return "constant-replacement";
    case MutationRule::AggregationMutation: return "aggregation-mutation";
  }
  return "";
}

MutationRule rule_from_name(std::string_view name) {
  for (auto r : kAllRules) {
    if (rule_name(r) == name) return r;
  }
  throw InvalidArgument("unknown mutation rule: " + std::string(name));
}

std::string invert_operator(std::string_view op) {
  const auto up = sql::to_upper(op);
  if (up == ">") return "<=";
  if (up == "<=") return ">";
  if (up == "<") return ">=";
  if (up == ">=") return "<";
  if (up == "=" || up == "==") return "!=";
  if (up == "!=" || up == "<>") return "=";
  if (up == "AND") return match_case(std::string(op), "OR");
  if (up == "OR") return match_case(std::string(op), "AND");
  return "";
}

// ---- mutation -----------------------------------------------------------------

std::vector<Mutant> mutate(const sql::SqlAst& ast, MutationRule rule, const sql::Schema& schema,
                           std::uint64_t seed, const exec::Database* db,
                           const std::string& source_id) {
  Mutator mutator(ast, schema, db, seed);
  std::vector<Mutant> out;
  bool any_site = false;
  for (const auto& n : ast.nodes()) {
    const auto replacement = mutator.rewrite(rule, n.id);
    if (!replacement) continue;
    any_site = true;
    if (replacement->empty() || *replacement == n.text) continue;
    const auto mutated = ast.with_text(n.id, *replacement);
    Mutant m;
    m.rule = rule;
    m.ast_node = n.id;
    m.source_id = source_id;
    try {
      m.sql = sql::render(mutated);
      const auto reparsed = sql::parse(m.sql, schema);
      if (!(reparsed == mutated)) continue;
      m.lp_node = plan::lower(reparsed, schema).owner_of(n.id);
    } catch (const Error&) {
      continue;
    }
    if (m.lp_node < 0) continue;
    out.push_back(std::move(m));
  }
  if (!any_site) {
    throw NoApplicableSite(std::string(rule_name(rule)) + " has no target in this query");
  }
  return out;
}

std::vector<std::size_t> choose_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (k >= n) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto span = static_cast<double>(n - i);
    const auto j = i + std::min(static_cast<std::size_t>(uniform01(rng) * span), n - i - 1);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Example> generate_negatives(const Example& gold, const exec::Database& db,
                                        const sql::Schema& schema,
                                        const std::vector<MutationRule>& rules, int budget,
                                        std::uint64_t seed, NegativeStats* stats,
                                        int timeout_ms) {
  exec::ResultTable gold_result;
  try {
    gold_result = db.execute(gold.sql, timeout_ms);
  } catch (const Error& e) {
    throw GoldExecutionError("gold " + gold.id + " failed: " + e.what());
  }
  const auto ast = sql::parse(gold.sql, schema);
  NegativeStats local;
  std::vector<Example> kept;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    std::vector<Mutant> mutants;
    try {
      mutants = mutate(ast, rules[r], schema, seed + 0x9e3779b97f4a7c15ULL * (r + 1), &db, gold.id);
    } catch (const NoApplicableSite&) {
      continue;
    }
    for (const auto& m : mutants) {
      ++local.candidates;
      exec::ResultTable result;
      try {
        result = db.execute(m.sql, timeout_ms);
      } catch (const ExecError&) {
        ++local.exec_failed;
        continue;
      } catch (const Timeout&) {
        ++local.exec_failed;
        continue;
      }
      if (exec::results_equal(result, gold_result)) {
        ++local.same_result;
        continue;
      }
      Example ex;
      ex.id = gold.id + ":" + std::string(rule_name(m.rule)) + ":" + std::to_string(m.ast_node);
      ex.db_id = gold.db_id;
      ex.question = gold.question;
      ex.sql = m.sql;
      ex.label = 1;
      ex.source = Source::AstAug;
      std::map<int, int> sub;
      const auto plan = plan::lower(sql::parse(m.sql, schema), schema);
      for (const auto& n : plan.nodes()) sub[n.id] = n.id == m.lp_node ? 1 : 0;
      ex.sublabels = std::move(sub);
      kept.push_back(std::move(ex));
    }
  }
  if (budget >= 0 && kept.size() > static_cast<std::size_t>(budget)) {
    std::vector<Example> chosen;
    for (auto i : choose_indices(kept.size(), static_cast<std::size_t>(budget), seed)) {
      chosen.push_back(std::move(kept[i]));
    }
    kept = std::move(chosen);
  }
  local.kept = static_cast<int>(kept.size());
  if (stats != nullptr) *stats = local;
  return kept;
}

Corpus balance(const Corpus& corpus, double target_np_ratio, std::uint64_t seed,
               std::vector<std::string>* warnings) {
  if (!(target_np_ratio > 0.0)) throw InvalidArgument("N/P ratio must be positive");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].label) throw CorpusFormatError("balance needs labeled examples: " + corpus[i].id);
    (*corpus[i].label == 1 ? neg : pos).push_back(i);
  }
  if (pos.empty() || neg.empty()) throw SingleClassCorpus("corpus must contain both classes");
  const auto target = static_cast<std::size_t>(std::llround(target_np_ratio * static_cast<double>(pos.size())));
  if (neg.size() <= target) {
    if (neg.size() < target && warnings != nullptr) {
      warnings->push_back("only " + std::to_string(neg.size()) + " negatives for " +
                          std::to_string(pos.size()) + " positives; cannot reach N/P ratio " +
                          std::to_string(target_np_ratio) + " without upsampling");
    }
    return corpus;
  }
  std::vector<bool> keep(corpus.size(), true);
  for (auto i : neg) keep[i] = false;
  for (auto k : choose_indices(neg.size(), target, seed)) keep[neg[k]] = true;
  Corpus out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (keep[i]) out.push_back(corpus[i]);
  }
  return out;
}

// ---- JSONL --------------------------------------------------------------------

nlohmann::json to_json(const Example& ex) {
  nlohmann::json j{{"id", ex.id},
                   {"db_id", ex.db_id},
                   {"question", ex.question},
                   {"sql", ex.sql},
                   {"source", std::string(source_name(ex.source))}};
  if (ex.label) j["label"] = *ex.label;
  if (ex.sublabels) {
    nlohmann::json sub = nlohmann::json::object();
    for (const auto& [k, v] : *ex.sublabels) sub[std::to_string(k)] = v;
    j["sublabels"] = sub;
  }
  return j;
}

Example example_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw CorpusFormatError("example must be a JSON object");
  static const std::set<std::string> kKeys{"id", "db_id", "question", "sql", "label", "sublabels", "source"};
  for (const auto& [key, _] : j.items()) {
    if (kKeys.count(key) == 0) throw CorpusFormatError("unknown field: " + key);
  }
  Example ex;
  try {
    ex.id = j.at("id").get<std::string>();
    ex.db_id = j.at("db_id").get<std::string>();
    ex.question = j.at("question").get<std::string>();
    ex.sql = j.at("sql").get<std::string>();
    ex.source = j.contains("source") ? source_from_name(j.at("source").get<std::string>())
                                     : Source::Gold;
    if (j.contains("label") && !j.at("label").is_null()) ex.label = j.at("label").get<int>();
    if (j.contains("sublabels") && !j.at("sublabels").is_null()) {
      std::map<int, int> sub;
      for (const auto& [k, v] : j.at("sublabels").items()) {
        int node = 0;
        auto [p, ec] = std::from_chars(k.data(), k.data() + k.size(), node);
        if (ec != std::errc() || p != k.data() + k.size() || node < 0) {
          throw CorpusFormatError("sublabel key is not an LP node id: " + k);
        }
        sub[node] = v.get<int>();
      }
      ex.sublabels = std::move(sub);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorpusFormatError(std::string("malformed example: ") + e.what());
  }
  if (ex.id.empty()) throw CorpusFormatError("example id is empty");
  return ex;
}

void validate_corpus(const Corpus& corpus, bool require_labels) {
  std::set<std::string> ids;
  for (const auto& ex : corpus) {
    if (!ids.insert(ex.id).second) throw CorpusFormatError("duplicate id: " + ex.id);
    if (ex.label && *ex.label != 0 && *ex.label != 1) {
      throw CorpusFormatError("label must be 0 or 1 in " + ex.id);
    }
    if (require_labels && !ex.label) throw CorpusFormatError("missing label in " + ex.id);
    if (ex.sublabels) {
      if (ex.source != Source::AstAug) {
        throw CorpusFormatError("sublabels are only allowed on ast-aug examples: " + ex.id);
      }
      for (const auto& [_, v] : *ex.sublabels) {
        if (v != 0 && v != 1) throw CorpusFormatError("sublabel must be 0 or 1 in " + ex.id);
      }
    }
  }
}

Corpus read_jsonl(std::istream& in, bool require_labels) {
  Corpus out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusFormatError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const CorpusFormatError& e) {
      throw CorpusFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_corpus(out, require_labels);
  return out;
}

Corpus read_jsonl_file(const std::string& path, bool require_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusFormatError("cannot open corpus " + path);
  return read_jsonl(in, require_labels);
}

void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& ex : corpus) out << to_json(ex).dump() << '\n';
}

void write_jsonl_file(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusFormatError("cannot write corpus " + path);
  write_jsonl(out, corpus);
  if (!out) throw CorpusFormatError("failed writing corpus " + path);
}

}  // namespace sqlsv::augment
