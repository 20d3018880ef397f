#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqlsv/exec/exec.hpp"
#include "sqlsv/plan/logical_plan.hpp"
#include "sqlsv/sql/ast.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::augment {

// ---- corpus -------------------------------------------------------------------

enum class Source : std::uint8_t { Gold, Llm, AstAug };
std::string_view source_name(Source s);  // "gold", "llm", "ast-aug"
Source source_from_name(std::string_view name);

struct Example {
  std::string id;
  std::string db_id;
  std::string question;
  std::string sql;
  std::optional<int> label;  // 0 valid, 1 invalid; absent for unlabeled candidates
  std::optional<std::map<int, int>> sublabels;  // LP node -> {0,1}, ast-aug only
  Source source = Source::Gold;

  friend bool operator==(const Example&, const Example&) = default;
};

using Corpus = std::vector<Example>;

nlohmann::json to_json(const Example& ex);
// Throws CorpusFormatError on missing/ill-typed fields or unknown keys.
Example example_from_json(const nlohmann::json& j);

// Unique ids, labels in {0,1}, sublabels only on ast-aug examples, and
// `require_labels` demands a label on every example. Throws CorpusFormatError.
void validate_corpus(const Corpus& corpus, bool require_labels);

// One JSON object per line. Blank lines are skipped. Line numbers in errors.
Corpus read_jsonl(std::istream& in, bool require_labels = true);
Corpus read_jsonl_file(const std::string& path, bool require_labels = true);
void write_jsonl(std::ostream& out, const Corpus& corpus);
void write_jsonl_file(const std::string& path, const Corpus& corpus);

// ---- mutation -----------------------------------------------------------------

enum class MutationRule : std::uint8_t {
  OperatorInversion,
  IdentifierSubstitution,
  ConstantReplacement,
  AggregationMutation,
};
inline constexpr MutationRule kAllRules[] = {
    MutationRule::OperatorInversion, MutationRule::IdentifierSubstitution,
    MutationRule::ConstantReplacement, MutationRule::AggregationMutation};
std::string_view rule_name(MutationRule r);
MutationRule rule_from_name(std::string_view name);

struct Mutant {
  std::string sql;
  MutationRule rule = MutationRule::OperatorInversion;
  sql::NodeId ast_node = 0;
  plan::NodeId lp_node = -1;  // lowest LP node owning the mutated site
  std::string source_id;
};

// Inverted operator for rule 1, or empty when `op` is not invertible.
std::string invert_operator(std::string_view op);

// One mutant per applicable site, in pre-order. Each mutant changes exactly
// one node's text, re-parses, and re-lowers. `db` supplies constant pools and
// may be null (numeric +-1 and string-pool fallbacks). Throws NoApplicableSite.
std::vector<Mutant> mutate(const sql::SqlAst& ast, MutationRule rule, const sql::Schema& schema,
                           std::uint64_t seed, const exec::Database* db = nullptr,
                           const std::string& source_id = "");

struct NegativeStats {
  int candidates = 0;
  int exec_failed = 0;
  int same_result = 0;
  int kept = 0;
};

// Execution-filtered mutants of a gold example as label-1 ast-aug examples
// with one-hot sublabels. Keeps at most `budget` (seeded choice, original
// order preserved). Throws GoldExecutionError when the gold query fails.
std::vector<Example> generate_negatives(const Example& gold, const exec::Database& db,
                                        const sql::Schema& schema,
                                        const std::vector<MutationRule>& rules, int budget,
                                        std::uint64_t seed, NegativeStats* stats = nullptr,
                                        int timeout_ms = exec::kDefaultTimeoutMs);

// Subsamples invalid examples (label 1) down to round(ratio * #valid). With
// too few invalid examples the corpus is returned unchanged and a warning is
// appended. Relative order is preserved. Throws SingleClassCorpus.
Corpus balance(const Corpus& corpus, double target_np_ratio, std::uint64_t seed,
               std::vector<std::string>* warnings = nullptr);

// Seeded choice of k of n indices, returned ascending.
std::vector<std::size_t> choose_indices(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace sqlsv::augment
