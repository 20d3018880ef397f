#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlsv/augment/augment.hpp"
#include "sqlsv/featurize/featurize.hpp"
#include "sqlsv/nmpnn/nmpnn.hpp"
#include "sqlsv/sql/schema.hpp"
#include "sqlsv/validator/validator.hpp"

namespace sqlsv::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kProviderError = 4 };

struct ProviderConfig {
  std::string kind = "builtin";  // builtin | remote
  std::string url;
  int timeout_ms = 10000;
  bool fallback_to_builtin = false;  // use the builtin featurizer if remote is down
};

struct Config {
  ProviderConfig provider;
  nmpnn::NmpnnConfig nmpnn;
  validator::TrainConfig train;
  double np_ratio = 1.0;
  int augment_budget = 8;  // max negatives per gold example
  std::vector<augment::MutationRule> rules{std::begin(augment::kAllRules),
                                           std::end(augment::kAllRules)};
  bool strict_identifiers = false;
  double val_fraction = 0.2;  // train split when no --val corpus is given
  int exec_timeout_ms = 5000;
  std::string db;      // file, or directory of <db_id>.sqlite
  std::string schema;  // file, or directory of <db_id>.json

  // Unknown keys and invalid values raise ConfigError.
  static Config from_json(const nlohmann::json& j);
  static Config load(const std::string& path);
  nlohmann::json to_json() const;
};

// Resolves a path that is either a single file (shared by every db_id) or a
// directory holding one file per db_id.
class PathSet {
 public:
  PathSet(std::string path, std::string extension);
  std::string resolve(const std::string& db_id) const;

 private:
  std::string path_;
  std::string extension_;
  bool directory_ = false;
};

class SchemaSet {
 public:
  explicit SchemaSet(const std::string& path);
  const sql::Schema& get(const std::string& db_id);

 private:
  PathSet paths_;
  std::map<std::string, sql::Schema> cache_;
};

// Builtin featurizer of width nmpnn.dim or the remote client. Throws
// ProviderUnavailable / DimMismatch unless fallback applies.
std::unique_ptr<feat::EmbeddingProvider> make_provider(const Config& config, std::ostream& err);

// Seeded stratified split; `fraction` of each class goes to the second part.
std::pair<augment::Corpus, augment::Corpus> stratified_split(const augment::Corpus& corpus,
                                                             double fraction, std::uint64_t seed);

// Encodes labeled examples; examples outside the SQL subset are skipped and
// counted in `skipped` when non-null.
std::vector<validator::EncodedExample> encode_corpus(const augment::Corpus& corpus,
                                                     SchemaSet& schemas,
                                                     const feat::EmbeddingProvider& provider,
                                                     feat::EmbeddingCache* cache,
                                                     int* skipped = nullptr);

// Entry point. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sqlsv::cli
