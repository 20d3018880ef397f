#include "sqlsv/featurize/featurize.hpp"

#include <cctype>
#include <cmath>
#include <mutex>

#include "httplib.h"
#include "json.hpp"
#include "sqlsv/errors.hpp"
#include "sqlsv/sql/render.hpp"

namespace sqlsv::feat {

std::vector<Vector> EmbeddingProvider::embed_batch(const std::string& context,
                                                   const std::vector<std::string>& texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(context, t));
  return out;
}

// ---- builtin ----------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::uint64_t fnv1a(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

BuiltinFeaturizer::BuiltinFeaturizer(int dim) : dim_(dim), name_("builtin-" + std::to_string(dim)) {
  if (dim < 1) throw InvalidArgument("featurizer dim must be positive");
}

Vector BuiltinFeaturizer::embed(const std::string& context, const std::string& text) const {
  Vector v(static_cast<std::size_t>(dim_), 0.0);
  auto accumulate = [&](const std::vector<std::string>& tokens, double weight) {
    for (const auto& tok : tokens) {
      const auto h = fnv1a(tok);
      const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
      v[static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim_))] += sign * weight;
    }
  };
  // The context carries unit total weight however long it is; otherwise a
  // schema-plus-SQL prefix outweighs a three-token node text tenfold.
  const auto context_tokens = tokenize(context);
  if (!context_tokens.empty()) accumulate(context_tokens, 1.0 / static_cast<double>(context_tokens.size()));
  accumulate(tokenize(text), 1.0);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

// ---- remote -----------------------------------------------------------------

RemoteProvider::RemoteProvider(RemoteOptions options)
    : options_(std::move(options)), name_("remote:" + options_.url) {
  if (options_.url.empty()) throw ProviderUnavailable("remote provider URL is empty");
  if (options_.timeout_ms <= 0) throw InvalidArgument("remote timeout must be positive");
  const auto probe = request("", {"probe"}, options_.dim);
  dim_ = static_cast<int>(probe.at(0).size());
  if (dim_ < 1) throw ProviderUnavailable("remote provider declared an empty dimension");
}

std::vector<Vector> RemoteProvider::request(const std::string& context,
                                            const std::vector<std::string>& texts,
                                            int expected_dim) const {
  httplib::Client client(options_.url);
  const auto secs = options_.timeout_ms / 1000;
  const auto usecs = (options_.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  const nlohmann::json body{{"context", context}, {"texts", texts}};
  auto res = client.Post("/embed", body.dump(), "application/json");
  if (!res) {
    throw ProviderUnavailable("POST " + options_.url + "/embed failed: " +
                              httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ProviderUnavailable("POST " + options_.url + "/embed returned HTTP " +
                              std::to_string(res->status));
  }
  std::vector<Vector> vectors;
  int dim = 0;
  try {
    const auto j = nlohmann::json::parse(res->body);
    dim = j.at("dim").get<int>();
    vectors = j.at("vectors").get<std::vector<Vector>>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderUnavailable(std::string("malformed /embed response: ") + e.what());
  }
  if (vectors.size() != texts.size()) {
    throw ProviderUnavailable("/embed returned " + std::to_string(vectors.size()) +
                              " vectors for " + std::to_string(texts.size()) + " texts");
  }
  if (expected_dim > 0 && dim != expected_dim) {
    throw DimMismatch("/embed declared dim " + std::to_string(dim) + ", expected " +
                      std::to_string(expected_dim));
  }
  for (const auto& v : vectors) {
    if (static_cast<int>(v.size()) != dim) {
      throw DimMismatch("/embed vector length " + std::to_string(v.size()) +
                        " differs from declared dim " + std::to_string(dim));
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw ProviderUnavailable("/embed returned a non-finite value");
    }
  }
  return vectors;
}

Vector RemoteProvider::embed(const std::string& context, const std::string& text) const {
  return request(context, {text}, dim_).at(0);
}

std::vector<Vector> RemoteProvider::embed_batch(const std::string& context,
                                                const std::vector<std::string>& texts) const {
  if (texts.empty()) return {};
  return request(context, texts, dim_);
}

// ---- cache ------------------------------------------------------------------

std::string EmbeddingCache::key(const std::string& provider, const std::string& context,
                                const std::string& text) {
  // Length prefixes keep the concatenation unambiguous.
  std::string k;
  k.reserve(provider.size() + context.size() + text.size() + 32);
  for (const auto* part : {&provider, &context, &text}) {
    k += std::to_string(part->size());
    k += ':';
    k += *part;
  }
  return k;
}

bool EmbeddingCache::lookup(const std::string& key, Vector& out) const {
  std::shared_lock lock(mutex_);
  const auto it = map_.find(key);
  if (it == map_.end()) return false;
  out = it->second;
  return true;
}

void EmbeddingCache::store(const std::string& key, const Vector& value) {
  std::unique_lock lock(mutex_);
  map_.emplace(key, value);
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return map_.size();
}

void EmbeddingCache::clear() {
  std::unique_lock lock(mutex_);
  map_.clear();
  hits_ = 0;
  misses_ = 0;
}

namespace {
void check_vector(const EmbeddingProvider& provider, const Vector& v) {
  if (static_cast<int>(v.size()) != provider.dim()) {
    throw DimMismatch("provider " + provider.name() + " returned length " +
                      std::to_string(v.size()) + ", declared " + std::to_string(provider.dim()));
  }
}
}  // namespace

Vector embed(const EmbeddingProvider& provider, const std::string& context,
             const std::string& text, EmbeddingCache* cache) {
  if (text.empty()) throw InvalidArgument("embed: text must be nonempty");
  if (cache == nullptr) {
    auto v = provider.embed(context, text);
    check_vector(provider, v);
    return v;
  }
  const auto k = EmbeddingCache::key(provider.name(), context, text);
  Vector v;
  if (cache->lookup(k, v)) {
    ++cache->hits_;
    return v;
  }
  ++cache->misses_;
  v = provider.embed(context, text);
  check_vector(provider, v);
  cache->store(k, v);
  return v;
}

std::vector<Vector> embed_many(const EmbeddingProvider& provider, const std::string& context,
                               const std::vector<std::string>& texts, EmbeddingCache* cache) {
  for (const auto& t : texts) {
    if (t.empty()) throw InvalidArgument("embed: text must be nonempty");
  }
  std::vector<Vector> out(texts.size());
  std::vector<std::size_t> missing;
  std::vector<std::string> missing_texts;
  std::vector<std::string> keys(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (cache != nullptr) {
      keys[i] = EmbeddingCache::key(provider.name(), context, texts[i]);
      if (cache->lookup(keys[i], out[i])) {
        ++cache->hits_;
        continue;
      }
      ++cache->misses_;
    }
    missing.push_back(i);
    missing_texts.push_back(texts[i]);
  }
  if (missing.empty()) return out;
  auto fresh = provider.embed_batch(context, missing_texts);
  if (fresh.size() != missing.size()) {
    throw DimMismatch("provider " + provider.name() + " returned the wrong number of vectors");
  }
  for (std::size_t j = 0; j < missing.size(); ++j) {
    check_vector(provider, fresh[j]);
    if (cache != nullptr) cache->store(keys[missing[j]], fresh[j]);
    out[missing[j]] = std::move(fresh[j]);
  }
  return out;
}

// ---- texts ------------------------------------------------------------------

std::string compress_schema(const sql::Schema& schema) {
  std::string out;
  for (const auto& t : schema.tables()) {
    if (!out.empty()) out += "; ";
    out += t.name + "(";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (i > 0) out += ", ";
      out += t.columns[i];
    }
    out += ")";
  }
  return out;
}

namespace {

std::string operator_gloss(const std::string& op) {
  const auto up = sql::to_upper(op);
  if (up == ">") return "greater than";
  if (up == "<") return "less than";
  if (up == ">=") return "at least";
  if (up == "<=") return "at most";
  if (up == "=" || up == "==") return "equals";
  if (up == "!=" || up == "<>") return "not equals";
  if (up == "+") return "plus";
  if (up == "-") return "minus";
  if (up == "*") return "times";
  if (up == "/") return "divided by";
  if (up == "%") return "modulo";
  if (up == "||") return "concatenated";
  if (up == "ASC") return "ascending";
  if (up == "DESC") return "descending";
  return "";
}

std::string function_gloss(const std::string& name) {
  const auto up = sql::to_upper(name);
  if (up == "AVG") return "average";
  if (up == "MAX") return "maximum";
  if (up == "MIN") return "minimum";
  if (up == "SUM") return "total sum";
  if (up == "COUNT") return "count number";
  return "";
}

std::string with_gloss(std::string head, const std::string& gloss) {
  if (!gloss.empty()) head += " " + gloss;
  return head;
}

}  // namespace

std::string verbalize_node(const hir::ExprAst& ast, sql::NodeId id) {
  const auto& n = ast.node(id);
  switch (n.kind) {
    case sql::AstKind::Column:
      return "column " + n.text;
    case sql::AstKind::Table:
      return "table " + n.text;
    case sql::AstKind::Literal:
      return "value " + n.text;
    case sql::AstKind::Star:
      return "all columns";
    case sql::AstKind::BinaryOp:
    case sql::AstKind::UnaryOp:
      return with_gloss("operator " + n.text, operator_gloss(n.text));
    case sql::AstKind::FuncCall:
      return with_gloss("function " + n.text, function_gloss(n.text));
    case sql::AstKind::Alias:
      return "alias " + n.text;
    case sql::AstKind::List:
      return n.text + " list";
    default:
      return std::string(sql::kind_name(n.kind)) + (n.text.empty() ? "" : " " + n.text);
  }
}

NodeEmbeddings embed_hir(const hir::Hir& hir, const sql::Schema& schema,
                         const std::string& full_sql, const EmbeddingProvider& provider,
                         EmbeddingCache* cache) {
  const auto context = compress_schema(schema) + "\n" + full_sql;
  NodeEmbeddings out;
  out.reserve(hir.asts.size());
  for (const auto& ast : hir.asts) {
    std::vector<std::string> texts;
    texts.reserve(ast.size());
    for (const auto& n : ast.nodes()) texts.push_back(verbalize_node(ast, n.id));
    out.push_back(embed_many(provider, context, texts, cache));
  }
  return out;
}

Vector embed_question(const std::string& question, const sql::Schema& schema,
                      const EmbeddingProvider& provider, EmbeddingCache* cache) {
  return embed(provider, compress_schema(schema), question, cache);
}

}  // namespace sqlsv::feat
