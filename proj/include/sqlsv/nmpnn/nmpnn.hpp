#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqlsv/autograd/tensor.hpp"
#include "sqlsv/featurize/featurize.hpp"
#include "sqlsv/hir/hir.hpp"

namespace sqlsv::nmpnn {

enum class Pooling : std::uint8_t { Mean, Sum };
enum class Aggregator : std::uint8_t { MeanLinear, Gat };

struct NmpnnConfig {
  int t_ast = 2;
  int t_lp = 2;
  int dim = 64;
  Pooling pooling = Pooling::Mean;
  Aggregator aggregator = Aggregator::MeanLinear;
  double dropout = 0.3;  // on every message-passing layer output, training only

  void validate() const;  // throws InvalidArgument
  nlohmann::json to_json() const;
  static NmpnnConfig from_json(const nlohmann::json& j);
  friend bool operator==(const NmpnnConfig&, const NmpnnConfig&) = default;
};

// Undirected adjacency lists; neighbors sorted and deduplicated.
using Neighbors = std::vector<std::vector<int>>;
Neighbors undirected_neighbors(int n, const std::vector<std::pair<int, int>>& edges);

// Adjacency of every expression AST and of the plan, computed once per HIR.
struct NestedGraph {
  std::vector<Neighbors> ast;  // indexed by LP node
  Neighbors lp;
};
NestedGraph nested_graph(const hir::Hir& hir);

// Parameter names "{level}.{step}.w_self|w_nbr|bias|attn" with level in
// {ast, lp}. Glorot-uniform weights, zero bias; deterministic given `rng`.
void init_params(ad::ParamStore& params, const NmpnnConfig& config, std::mt19937_64& rng);

// Uniform draw in [0, 1) built from the top 53 bits, portable across
// standard libraries (std::uniform_real_distribution is not).
double uniform01(std::mt19937_64& rng);

// Training-time state; pass nullptr for deterministic evaluation.
struct Dropout {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

// `steps` rounds of h' = ReLU(h W_self + AGG(nbrs) + bias) over one graph.
// `states` is n x d with one row per node. `level` is "ast" or "lp".
ad::Tensor message_pass(const Neighbors& nbrs, ad::Tensor states, const ad::ParamStore& params,
                        const NmpnnConfig& config, const std::string& level, int steps,
                        const Dropout* dropout);

ad::Tensor ast_pass(const Neighbors& nbrs, const ad::Tensor& init, const ad::ParamStore& params,
                    const NmpnnConfig& config, const Dropout* dropout = nullptr);

// Mean or sum over rows. Throws EmptyGraph for zero rows.
ad::Tensor pool(const ad::Tensor& states, Pooling mode);

struct Encoding {
  ad::Tensor h_sql;      // 1 x d
  ad::Tensor lp_states;  // |plan| x d, row i = final state of LP node i
};

// Nested message passing: per-node AST pass and pooling, then the LP pass and
// pooling. Throws DimMismatch when embeddings do not cover the HIR.
Encoding encode_sql(const NestedGraph& graph, const feat::NodeEmbeddings& embeddings,
                    const ad::ParamStore& params, const NmpnnConfig& config,
                    const Dropout* dropout = nullptr);
Encoding encode_sql(const hir::Hir& hir, const feat::NodeEmbeddings& embeddings,
                    const ad::ParamStore& params, const NmpnnConfig& config,
                    const Dropout* dropout = nullptr);

// Stacks vectors as rows of a constant (no-grad) tensor of width `dim`.
ad::Tensor stack_rows(const std::vector<feat::Vector>& rows, int dim);

}  // namespace sqlsv::nmpnn
