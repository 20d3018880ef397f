#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sqlsv/hir/hir.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::feat {

using Vector = std::vector<double>;

// Maps (context, text) to a fixed-width vector. Implementations must be
// deterministic and safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual const std::string& name() const = 0;
  virtual int dim() const = 0;
  virtual Vector embed(const std::string& context, const std::string& text) const = 0;
  // One vector per text, all sharing `context`. Default loops over embed().
  virtual std::vector<Vector> embed_batch(const std::string& context,
                                          const std::vector<std::string>& texts) const;
};

// Offline featurizer: case-folded alphanumeric tokens of context and text,
// signed-hashed into `dim` buckets, counted, then L2-normalized. Each text
// token counts 1; each context token counts 1/(number of context tokens).
class BuiltinFeaturizer final : public EmbeddingProvider {
 public:
  explicit BuiltinFeaturizer(int dim = 64);
  const std::string& name() const override { return name_; }
  int dim() const override { return dim_; }
  Vector embed(const std::string& context, const std::string& text) const override;

 private:
  int dim_;
  std::string name_;
};

// Lower-cased runs of alphanumeric characters (bytes >= 0x80 count as word
// characters so UTF-8 words stay whole).
std::vector<std::string> tokenize(std::string_view text);
// 64-bit FNV-1a, the bucket/sign source of the builtin featurizer.
std::uint64_t fnv1a(std::string_view token);

struct RemoteOptions {
  std::string url;  // scheme://host[:port], no trailing path
  int timeout_ms = 10000;
  int dim = 0;      // 0: discover from a probe request
};

// Client for POST /embed {"context", "texts"} -> {"dim", "vectors"}.
class RemoteProvider final : public EmbeddingProvider {
 public:
  // Throws ProviderUnavailable when the probe (dim discovery) fails.
  explicit RemoteProvider(RemoteOptions options);
  const std::string& name() const override { return name_; }
  int dim() const override { return dim_; }
  Vector embed(const std::string& context, const std::string& text) const override;
  std::vector<Vector> embed_batch(const std::string& context,
                                  const std::vector<std::string>& texts) const override;

 private:
  std::vector<Vector> request(const std::string& context, const std::vector<std::string>& texts,
                              int expected_dim) const;

  RemoteOptions options_;
  std::string name_;
  int dim_ = 0;
};

// Content-addressed vector cache keyed on (provider name, context, text).
class EmbeddingCache {
 public:
  bool lookup(const std::string& key, Vector& out) const;
  void store(const std::string& key, const Vector& value);

  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }
  std::size_t size() const;
  void clear();

  static std::string key(const std::string& provider, const std::string& context,
                         const std::string& text);

 private:
  friend Vector embed(const EmbeddingProvider&, const std::string&, const std::string&,
                      EmbeddingCache*);
  friend std::vector<Vector> embed_many(const EmbeddingProvider&, const std::string&,
                                        const std::vector<std::string>&, EmbeddingCache*);

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Vector> map_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

// Cache-aware single embedding. `cache` may be null. Throws InvalidArgument
// on empty text and DimMismatch when the provider breaks its declared dim.
Vector embed(const EmbeddingProvider& provider, const std::string& context,
             const std::string& text, EmbeddingCache* cache);
// Cache-aware batch; misses go to the provider in one embed_batch call.
std::vector<Vector> embed_many(const EmbeddingProvider& provider, const std::string& context,
                               const std::vector<std::string>& texts, EmbeddingCache* cache);

// "t1(c1, c2); t2(c1, ...)" with tables in schema order.
std::string compress_schema(const sql::Schema& schema);

// Embedding text of an expression node: kind word, lexeme, and a spelled-out
// reading of operator symbols and aggregate names ("operator > greater than").
std::string verbalize_node(const hir::ExprAst& ast, sql::NodeId id);

// Per LP node, per expression-AST node embeddings.
using NodeEmbeddings = std::vector<std::vector<Vector>>;

// Context for every node: compressed schema followed by the full SQL text.
NodeEmbeddings embed_hir(const hir::Hir& hir, const sql::Schema& schema,
                         const std::string& full_sql, const EmbeddingProvider& provider,
                         EmbeddingCache* cache);

// Question embedding with the compressed schema as context.
Vector embed_question(const std::string& question, const sql::Schema& schema,
                      const EmbeddingProvider& provider, EmbeddingCache* cache);

}  // namespace sqlsv::feat
