#include "sqlsv/cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "sqlsv/errors.hpp"
#include "sqlsv/exec/exec.hpp"
#include "sqlsv/metrics/metrics.hpp"
#include "sqlsv/plan/logical_plan.hpp"
#include "sqlsv/sql/parser.hpp"
#include "sqlsv/sql/render.hpp"

namespace sqlsv::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kUrlEnv = "SQLSV_PROVIDER_URL";

template <typename T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (allowed.count(key) == 0) throw ConfigError("unknown config key: " + where + key);
  }
}

int exit_code_for(const Error& e) {
  const auto& k = e.kind();
  if (k == "ProviderUnavailable" || k == "DimMismatch") return kProviderError;
  if (k == "ConfigError") return kUsage;
  return kDataError;
}

void emit_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

void emit_warning(std::ostream& err, const std::string& message) {
  err << nlohmann::json{{"warning", message}}.dump() << '\n';
}

std::uint64_t example_seed(std::uint64_t seed, const std::string& id) {
  return seed ^ feat::fnv1a(id);
}

}  // namespace

// ---- config -------------------------------------------------------------------

Config Config::from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"provider", "nmpnn", "train", "np_ratio", "augment_budget", "rules",
                  "strict_identifiers", "val_fraction", "exec_timeout_ms", "db", "schema"},
                 "");
  Config c;
  try {
    if (j.contains("provider")) {
      const auto& p = j.at("provider");
      reject_unknown(p, {"kind", "url", "timeout_ms", "fallback_to_builtin"}, "provider.");
      if (p.contains("kind")) c.provider.kind = get_as<std::string>(p.at("kind"), "provider.kind");
      if (p.contains("url")) c.provider.url = get_as<std::string>(p.at("url"), "provider.url");
      if (p.contains("timeout_ms")) c.provider.timeout_ms = get_as<int>(p.at("timeout_ms"), "provider.timeout_ms");
      if (p.contains("fallback_to_builtin")) {
        c.provider.fallback_to_builtin = get_as<bool>(p.at("fallback_to_builtin"), "provider.fallback_to_builtin");
      }
    }
    if (j.contains("nmpnn")) c.nmpnn = nmpnn::NmpnnConfig::from_json(j.at("nmpnn"));
    if (j.contains("train")) c.train = validator::TrainConfig::from_json(j.at("train"));
    if (j.contains("np_ratio")) c.np_ratio = get_as<double>(j.at("np_ratio"), "np_ratio");
    if (j.contains("augment_budget")) c.augment_budget = get_as<int>(j.at("augment_budget"), "augment_budget");
    if (j.contains("rules")) {
      c.rules.clear();
      for (const auto& r : j.at("rules")) {
        c.rules.push_back(augment::rule_from_name(get_as<std::string>(r, "rules")));
      }
    }
    if (j.contains("strict_identifiers")) {
      c.strict_identifiers = get_as<bool>(j.at("strict_identifiers"), "strict_identifiers");
    }
    if (j.contains("val_fraction")) c.val_fraction = get_as<double>(j.at("val_fraction"), "val_fraction");
    if (j.contains("exec_timeout_ms")) c.exec_timeout_ms = get_as<int>(j.at("exec_timeout_ms"), "exec_timeout_ms");
    if (j.contains("db")) c.db = get_as<std::string>(j.at("db"), "db");
    if (j.contains("schema")) c.schema = get_as<std::string>(j.at("schema"), "schema");
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  }
  if (c.provider.kind != "builtin" && c.provider.kind != "remote") {
    throw ConfigError("provider.kind must be 'builtin' or 'remote'");
  }
  if (c.provider.timeout_ms <= 0) throw ConfigError("provider.timeout_ms must be positive");
  if (!(c.np_ratio > 0.0)) throw ConfigError("np_ratio must be positive");
  if (c.augment_budget < 0) throw ConfigError("augment_budget must be nonnegative");
  if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
  if (c.exec_timeout_ms <= 0) throw ConfigError("exec_timeout_ms must be positive");
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json Config::to_json() const {
  nlohmann::json rules_json = nlohmann::json::array();
  for (auto r : rules) rules_json.push_back(std::string(augment::rule_name(r)));
  return {{"provider",
           {{"kind", provider.kind},
            {"url", provider.url},
            {"timeout_ms", provider.timeout_ms},
            {"fallback_to_builtin", provider.fallback_to_builtin}}},
          {"nmpnn", nmpnn.to_json()},
          {"train", train.to_json()},
          {"np_ratio", np_ratio},
          {"augment_budget", augment_budget},
          {"rules", rules_json},
          {"strict_identifiers", strict_identifiers},
          {"val_fraction", val_fraction},
          {"exec_timeout_ms", exec_timeout_ms},
          {"db", db},
          {"schema", schema}};
}

// ---- paths --------------------------------------------------------------------

PathSet::PathSet(std::string path, std::string extension)
    : path_(std::move(path)), extension_(std::move(extension)) {
  if (path_.empty()) throw ConfigError("missing path (expected a " + extension_ + " file or directory)");
  std::error_code ec;
  directory_ = fs::is_directory(path_, ec);
  if (!directory_ && !fs::exists(path_, ec)) throw ConfigError("path does not exist: " + path_);
}

std::string PathSet::resolve(const std::string& db_id) const {
  if (!directory_) return path_;
  const auto p = fs::path(path_) / (db_id + extension_);
  if (!fs::exists(p)) throw CorpusFormatError("no " + extension_ + " file for db_id '" + db_id + "' in " + path_);
  return p.string();
}

SchemaSet::SchemaSet(const std::string& path) : paths_(path, ".json") {}

const sql::Schema& SchemaSet::get(const std::string& db_id) {
  const auto file = paths_.resolve(db_id);
  auto it = cache_.find(file);
  if (it == cache_.end()) it = cache_.emplace(file, sql::Schema::load(file)).first;
  return it->second;
}

// ---- provider -----------------------------------------------------------------

std::unique_ptr<feat::EmbeddingProvider> make_provider(const Config& config, std::ostream& err) {
  if (config.provider.kind == "builtin") {
    return std::make_unique<feat::BuiltinFeaturizer>(config.nmpnn.dim);
  }
  try {
    return std::make_unique<feat::RemoteProvider>(
        feat::RemoteOptions{config.provider.url, config.provider.timeout_ms, config.nmpnn.dim});
  } catch (const ProviderUnavailable& e) {
    if (!config.provider.fallback_to_builtin) throw;
    emit_warning(err, std::string("remote provider unavailable, using builtin featurizer: ") + e.what());
    return std::make_unique<feat::BuiltinFeaturizer>(config.nmpnn.dim);
  }
}

// ---- helpers ------------------------------------------------------------------

std::pair<augment::Corpus, augment::Corpus> stratified_split(const augment::Corpus& corpus,
                                                             double fraction, std::uint64_t seed) {
  std::vector<bool> second(corpus.size(), false);
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].label.value_or(0) == cls) members.push_back(i);
    }
    auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    if (k == 0 && members.size() >= 2) k = 1;
    for (auto j : augment::choose_indices(members.size(), k, seed + static_cast<std::uint64_t>(cls))) {
      second[members[j]] = true;
    }
  }
  std::pair<augment::Corpus, augment::Corpus> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (second[i] ? out.second : out.first).push_back(corpus[i]);
  }
  return out;
}

std::vector<validator::EncodedExample> encode_corpus(const augment::Corpus& corpus,
                                                     SchemaSet& schemas,
                                                     const feat::EmbeddingProvider& provider,
                                                     feat::EmbeddingCache* cache, int* skipped) {
  std::vector<validator::EncodedExample> out;
  out.reserve(corpus.size());
  int skip = 0;
  for (const auto& ex : corpus) {
    if (!ex.label) throw CorpusFormatError("unlabeled example " + ex.id + "; run ingest first");
    try {
      out.push_back(validator::encode_example(ex.question, ex.sql, schemas.get(ex.db_id), provider,
                                              cache, *ex.label));
    } catch (const SyntaxError&) {
      ++skip;
    } catch (const UnsupportedConstruct&) {
      ++skip;
    } catch (const LoweringError&) {
      ++skip;
    }
  }
  if (skipped != nullptr) *skipped = skip;
  return out;
}

// ---- commands -----------------------------------------------------------------

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string db, schema, in, out, checkpoint, val, gold, question, sql, db_id, provider_url;
  std::optional<double> np_ratio;
  std::optional<int> budget;
};

Config effective_config(const Flags& f) {
  Config c = f.config.empty() ? Config{} : Config::load(f.config);
  if (f.seed) c.train.seed = *f.seed;
  if (f.np_ratio) {
    if (!(*f.np_ratio > 0.0)) throw ConfigError("--np-ratio must be positive");
    c.np_ratio = *f.np_ratio;
  }
  if (f.budget) {
    if (*f.budget < 0) throw ConfigError("--budget must be nonnegative");
    c.augment_budget = *f.budget;
  }
  if (!f.db.empty()) c.db = f.db;
  if (!f.schema.empty()) c.schema = f.schema;
  if (!f.provider_url.empty()) {
    c.provider.url = f.provider_url;
  } else if (const char* env = std::getenv(kUrlEnv); env != nullptr && c.provider.url.empty()) {
    c.provider.url = env;
  }
  if (!f.provider_url.empty() && c.provider.kind == "builtin") c.provider.kind = "remote";
  return c;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required flag ") + flag);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusFormatError("cannot write " + path);
  out << text;
}

int cmd_ingest(const Flags& f, std::ostream& out, std::ostream& err) {
  require(f.in, "--in");
  require(f.out, "--out");
  const Config c = effective_config(f);
  SchemaSet schemas(c.schema);
  std::optional<PathSet> dbs;
  if (!c.db.empty()) dbs.emplace(c.db, ".sqlite");

  auto corpus = augment::read_jsonl_file(f.in, false);
  augment::Corpus golds;
  if (!f.gold.empty()) golds = augment::read_jsonl_file(f.gold, true);
  std::map<std::pair<std::string, std::string>, std::string> gold_sql;
  for (const auto* set : {&golds, &corpus}) {
    for (const auto& ex : *set) {
      if (ex.source == augment::Source::Gold && ex.label == 0) {
        gold_sql.emplace(std::make_pair(ex.db_id, ex.question), ex.sql);
      }
    }
  }

  std::map<std::string, exec::Database> open_dbs;
  auto database = [&](const std::string& db_id) -> const exec::Database& {
    if (!dbs) throw ConfigError("labeling candidates needs --db");
    const auto path = dbs->resolve(db_id);
    auto it = open_dbs.find(path);
    if (it == open_dbs.end()) it = open_dbs.emplace(path, exec::Database(path)).first;
    return it->second;
  };

  augment::Corpus kept;
  int syntax = 0, unlabelable = 0, no_gold = 0, gold_failed = 0;
  for (auto ex : corpus) {
    const auto& schema = schemas.get(ex.db_id);
    try {
      const auto ast = sql::parse(ex.sql, schema, {c.strict_identifiers});
      plan::lower(ast, schema);
      ex.sql = sql::render(ast);
    } catch (const SyntaxError&) {
      ++syntax;
      continue;
    } catch (const UnsupportedConstruct&) {
      ++syntax;
      continue;
    } catch (const UnknownIdentifier&) {
      ++syntax;
      continue;
    } catch (const LoweringError&) {
      ++syntax;
      continue;
    }
    if (!ex.label) {
      const auto g = gold_sql.find({ex.db_id, ex.question});
      if (g == gold_sql.end()) {
        ++no_gold;
        continue;
      }
      try {
        const auto label = exec::label_by_execution(ex.sql, g->second, database(ex.db_id),
                                                    c.exec_timeout_ms);
        if (label == exec::Label::Unlabelable) {
          ++unlabelable;
          continue;
        }
        ex.label = static_cast<int>(label);
      } catch (const GoldExecutionError& e) {
        ++gold_failed;
        emit_warning(err, "example " + ex.id + ": " + e.what());
        continue;
      }
      if (ex.source == augment::Source::Gold) ex.source = augment::Source::Llm;
    }
    kept.push_back(std::move(ex));
  }
  augment::validate_corpus(kept, true);
  augment::write_jsonl_file(f.out, kept);
  out << nlohmann::json{{"read", corpus.size()},
                        {"written", kept.size()},
                        {"dropped_syntax", syntax},
                        {"dropped_unlabelable", unlabelable},
                        {"dropped_no_gold", no_gold},
                        {"dropped_gold_error", gold_failed}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_augment(const Flags& f, std::ostream& out, std::ostream& err) {
  require(f.in, "--in");
  require(f.out, "--out");
  const Config c = effective_config(f);
  SchemaSet schemas(c.schema);
  PathSet dbs(c.db, ".sqlite");
  const auto corpus = augment::read_jsonl_file(f.in, true);
  const std::uint64_t seed = c.train.seed;

  std::map<std::string, exec::Database> open_dbs;
  augment::Corpus result;
  int generated = 0, gold_errors = 0;
  for (const auto& ex : corpus) {
    result.push_back(ex);
    if (*ex.label != 0 || ex.source == augment::Source::AstAug) continue;
    const auto path = dbs.resolve(ex.db_id);
    auto it = open_dbs.find(path);
    if (it == open_dbs.end()) it = open_dbs.emplace(path, exec::Database(path)).first;
    try {
      auto negs = augment::generate_negatives(ex, it->second, schemas.get(ex.db_id), c.rules,
                                              c.augment_budget, example_seed(seed, ex.id),
                                              nullptr, c.exec_timeout_ms);
      generated += static_cast<int>(negs.size());
      for (auto& n : negs) result.push_back(std::move(n));
    } catch (const GoldExecutionError& e) {
      ++gold_errors;
      emit_warning(err, e.what());
    } catch (const SyntaxError& e) {
      ++gold_errors;
      emit_warning(err, "example " + ex.id + ": " + e.what());
    } catch (const UnsupportedConstruct& e) {
      ++gold_errors;
      emit_warning(err, "example " + ex.id + ": " + e.what());
    }
  }
  std::vector<std::string> warnings;
  const auto balanced = augment::balance(result, c.np_ratio, seed, &warnings);
  for (const auto& w : warnings) emit_warning(err, w);
  augment::validate_corpus(balanced, true);
  augment::write_jsonl_file(f.out, balanced);
  const auto neg = std::count_if(balanced.begin(), balanced.end(),
                                 [](const augment::Example& e) { return e.label == 1; });
  out << nlohmann::json{{"input", corpus.size()},
                        {"generated", generated},
                        {"gold_errors", gold_errors},
                        {"written", balanced.size()},
                        {"negatives", neg},
                        {"positives", static_cast<long>(balanced.size()) - neg}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_train(const Flags& f, std::ostream& out, std::ostream& err) {
  require(f.in, "--in");
  require(f.checkpoint, "--checkpoint");
  const Config c = effective_config(f);
  SchemaSet schemas(c.schema);
  auto provider = make_provider(c, err);
  if (provider->dim() != c.nmpnn.dim) {
    throw DimMismatch("provider dim " + std::to_string(provider->dim()) + " differs from nmpnn.dim " +
                      std::to_string(c.nmpnn.dim));
  }
  const auto corpus = augment::read_jsonl_file(f.in, true);
  augment::Corpus train_c, val_c;
  if (!f.val.empty()) {
    train_c = corpus;
    val_c = augment::read_jsonl_file(f.val, true);
  } else {
    std::tie(train_c, val_c) = stratified_split(corpus, c.val_fraction, c.train.seed);
  }
  feat::EmbeddingCache cache;
  int skipped_train = 0, skipped_val = 0;
  const auto train_set = encode_corpus(train_c, schemas, *provider, &cache, &skipped_train);
  const auto val_set = encode_corpus(val_c, schemas, *provider, &cache, &skipped_val);
  const auto model = validator::train(train_set, val_set, c.nmpnn, c.train);
  validator::save_checkpoint(model, f.checkpoint);
  out << nlohmann::json{{"checkpoint", f.checkpoint},
                        {"train_size", train_set.size()},
                        {"val_size", val_set.size()},
                        {"skipped", skipped_train + skipped_val},
                        {"threshold", model.threshold},
                        {"meta", {{"epochs_run", model.meta.at("epochs_run")},
                                  {"best_epoch", model.meta.at("best_epoch")},
                                  {"best_val_auroc", model.meta.at("best_val_auroc")}}}}
             .dump()
      << '\n';
  return kOk;
}

validator::Model load_model_for(const std::string& checkpoint,
                                const feat::EmbeddingProvider& provider) {
  auto model = validator::load_checkpoint(checkpoint);
  if (provider.dim() != model.nmpnn.dim) {
    throw DimMismatch("provider dim " + std::to_string(provider.dim()) +
                      " differs from checkpoint dim " + std::to_string(model.nmpnn.dim));
  }
  return model;
}

Config config_with_checkpoint_dim(Config c, const std::string& checkpoint) {
  // The builtin featurizer must match the width the checkpoint was trained with.
  c.nmpnn.dim = validator::load_checkpoint(checkpoint).nmpnn.dim;
  return c;
}

int cmd_eval(const Flags& f, std::ostream& out, std::ostream& err) {
  require(f.in, "--in");
  require(f.checkpoint, "--checkpoint");
  const Config c = config_with_checkpoint_dim(effective_config(f), f.checkpoint);
  SchemaSet schemas(c.schema);
  auto provider = make_provider(c, err);
  const auto model = load_model_for(f.checkpoint, *provider);
  const auto corpus = augment::read_jsonl_file(f.in, true);
  feat::EmbeddingCache cache;
  int skipped = 0;
  const auto examples = encode_corpus(corpus, schemas, *provider, &cache, &skipped);
  metrics::ScoredLabels sl;
  sl.scores = validator::predict_all(model, examples);
  for (const auto& ex : examples) sl.labels.push_back(ex.label);
  const auto rep = metrics::report(sl, model.threshold);
  if (!f.out.empty()) write_text(f.out, rep.dump() + "\n");
  out << rep.dump() << '\n';
  if (skipped > 0) emit_warning(err, std::to_string(skipped) + " examples outside the SQL subset were skipped");
  return kOk;
}

struct SinglePair {
  Config config;
  std::unique_ptr<feat::EmbeddingProvider> provider;
  validator::Model model;
  sql::Schema schema;
  validator::EncodedExample example;
};

SinglePair prepare_pair(const Flags& f, std::ostream& err) {
  require(f.checkpoint, "--checkpoint");
  require(f.question, "--question");
  require(f.sql, "--sql");
  SinglePair p;
  p.config = config_with_checkpoint_dim(effective_config(f), f.checkpoint);
  SchemaSet schemas(p.config.schema);
  p.schema = schemas.get(f.db_id);
  p.provider = make_provider(p.config, err);
  p.model = load_model_for(f.checkpoint, *p.provider);
  feat::EmbeddingCache cache;
  p.example = validator::encode_example(f.question, f.sql, p.schema, *p.provider, &cache);
  return p;
}

int cmd_validate(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto p = prepare_pair(f, err);
  const double score = validator::predict(p.model, p.example);
  out << nlohmann::json{{"score", score},
                        {"threshold", p.model.threshold},
                        {"verdict", score >= p.model.threshold ? "invalid" : "valid"}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_localize(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto p = prepare_pair(f, err);
  const auto loc = validator::localize(p.model, p.example.question, p.example.hir,
                                       p.example.nodes, p.schema);
  out << loc.payload().dump() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic validation of text-to-SQL output"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--db", f.db, "SQLite file or directory of <db_id>.sqlite");
    sub->add_option("--schema", f.schema, "schema JSON file or directory of <db_id>.json");
    sub->add_option("--provider-url", f.provider_url, "remote embedding service base URL");
  };
  auto* ingest = app.add_subcommand("ingest", "validate, normalize and label a JSONL corpus");
  common(ingest);
  ingest->add_option("--in", f.in)->required();
  ingest->add_option("--out", f.out)->required();
  ingest->add_option("--gold", f.gold, "gold corpus used to label candidates");

  auto* aug = app.add_subcommand("augment", "generate execution-checked negatives and balance");
  common(aug);
  aug->add_option("--in", f.in)->required();
  aug->add_option("--out", f.out)->required();
  aug->add_option("--np-ratio", f.np_ratio, "target negatives per positive");
  aug->add_option("--budget", f.budget, "max negatives per gold example");

  auto* train = app.add_subcommand("train", "train a validator checkpoint");
  common(train);
  train->add_option("--in", f.in)->required();
  train->add_option("--val", f.val, "validation corpus (default: split of --in)");
  train->add_option("--checkpoint", f.checkpoint)->required();

  auto* eval = app.add_subcommand("eval", "score a labeled corpus");
  common(eval);
  eval->add_option("--in", f.in)->required();
  eval->add_option("--checkpoint", f.checkpoint)->required();
  eval->add_option("--out", f.out, "also write the report here");

  auto* validate = app.add_subcommand("validate", "score one question/SQL pair");
  auto* localize = app.add_subcommand("localize", "per-LP-node scores for one pair");
  for (auto* sub : {validate, localize}) {
    common(sub);
    sub->add_option("--checkpoint", f.checkpoint)->required();
    sub->add_option("--question", f.question)->required();
    sub->add_option("--sql", f.sql)->required();
    sub->add_option("--db-id", f.db_id, "db_id used to pick a schema from a directory");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "UsageError", e.what());
    return kUsage;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(f, out, err);
    if (aug->parsed()) return cmd_augment(f, out, err);
    if (train->parsed()) return cmd_train(f, out, err);
    if (eval->parsed()) return cmd_eval(f, out, err);
    if (validate->parsed()) return cmd_validate(f, out, err);
    if (localize->parsed()) return cmd_localize(f, out, err);
  } catch (const Error& e) {
    emit_error(err, e.kind(), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    emit_error(err, "InternalError", e.what());
    return kDataError;
  }
  emit_error(err, "UsageError", "no command given");
  return kUsage;
}

}  // namespace sqlsv::cli
