#include "sqlsv/nmpnn/nmpnn.hpp"

#include <algorithm>
#include <cmath>

#include "sqlsv/errors.hpp"

namespace sqlsv::nmpnn {

namespace {

constexpr double kGatSlope = 0.2;

std::string pname(const std::string& level, int step, const char* what) {
  return level + "." + std::to_string(step) + "." + what;
}

ad::Tensor glorot(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (double& x : data) x = (2.0 * uniform01(rng) - 1.0) * limit;
  return ad::Tensor(rows, cols, std::move(data), true);
}

// Attention-weighted neighbor sum, single head.
ad::Tensor gat_messages(const Neighbors& nbrs, const ad::Tensor& z, const ad::Tensor& attn) {
  const int d = z.cols();
  std::vector<ad::Tensor> rows;
  rows.reserve(nbrs.size());
  for (std::size_t v = 0; v < nbrs.size(); ++v) {
    const auto& nb = nbrs[v];
    if (nb.empty()) {
      rows.push_back(ad::Tensor::zeros(1, d));
      continue;
    }
    const auto zv = ad::select_row(z, static_cast<int>(v));
    std::vector<ad::Tensor> pairs, zus;
    for (int u : nb) {
      auto zu = ad::select_row(z, u);
      pairs.push_back(ad::concat_cols({zv, zu}));
      zus.push_back(zu);
    }
    const auto logits = ad::leaky_relu(ad::matmul(ad::concat_rows(pairs), attn), kGatSlope);
    const auto alpha = ad::softmax_rows(ad::transpose(logits));  // 1 x k
    rows.push_back(ad::matmul(alpha, ad::concat_rows(zus)));
  }
  return ad::concat_rows(rows);
}

}  // namespace

void NmpnnConfig::validate() const {
  if (t_ast < 1 || t_lp < 1) throw InvalidArgument("t_ast and t_lp must be at least 1");
  if (dim < 1) throw InvalidArgument("dim must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
}

nlohmann::json NmpnnConfig::to_json() const {
  return {{"t_ast", t_ast},
          {"t_lp", t_lp},
          {"dim", dim},
          {"pooling", pooling == Pooling::Mean ? "mean" : "sum"},
          {"aggregator", aggregator == Aggregator::MeanLinear ? "mean-linear" : "gat"},
          {"dropout", dropout}};
}

NmpnnConfig NmpnnConfig::from_json(const nlohmann::json& j) {
  NmpnnConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "t_ast") {
      c.t_ast = value.get<int>();
    } else if (key == "t_lp") {
      c.t_lp = value.get<int>();
    } else if (key == "dim") {
      c.dim = value.get<int>();
    } else if (key == "dropout") {
      c.dropout = value.get<double>();
    } else if (key == "pooling") {
      const auto s = value.get<std::string>();
      if (s == "mean") c.pooling = Pooling::Mean;
      else if (s == "sum") c.pooling = Pooling::Sum;
      else throw InvalidArgument("unknown pooling: " + s);
    } else if (key == "aggregator") {
      const auto s = value.get<std::string>();
      if (s == "mean-linear") c.aggregator = Aggregator::MeanLinear;
      else if (s == "gat") c.aggregator = Aggregator::Gat;
      else throw InvalidArgument("unknown aggregator: " + s);
    } else {
      throw InvalidArgument("unknown nmpnn key: " + key);
    }
  }
  c.validate();
  return c;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Neighbors undirected_neighbors(int n, const std::vector<std::pair<int, int>>& edges) {
  Neighbors nbrs(static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw InvalidArgument("edge endpoint out of range");
    if (a == b) continue;
    nbrs[static_cast<std::size_t>(a)].push_back(b);
    nbrs[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : nbrs) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return nbrs;
}

NestedGraph nested_graph(const hir::Hir& hir) {
  NestedGraph g;
  g.ast.reserve(hir.asts.size());
  for (const auto& ast : hir.asts) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& n : ast.nodes())
      for (int c : n.children) edges.emplace_back(n.id, c);
    g.ast.push_back(undirected_neighbors(static_cast<int>(ast.size()), edges));
  }
  g.lp = undirected_neighbors(static_cast<int>(hir.plan.size()), hir.plan.edges());
  return g;
}

void init_params(ad::ParamStore& params, const NmpnnConfig& config, std::mt19937_64& rng) {
  config.validate();
  const int d = config.dim;
  for (const auto& [level, steps] : {std::pair<std::string, int>{"ast", config.t_ast},
                                     std::pair<std::string, int>{"lp", config.t_lp}}) {
    for (int t = 0; t < steps; ++t) {
      params.add(pname(level, t, "w_self"), glorot(d, d, rng));
      params.add(pname(level, t, "w_nbr"), glorot(d, d, rng));
      params.add(pname(level, t, "bias"), ad::Tensor::zeros(1, d, true));
      if (config.aggregator == Aggregator::Gat) {
        params.add(pname(level, t, "attn"), glorot(2 * d, 1, rng));
      }
    }
  }
}

ad::Tensor message_pass(const Neighbors& nbrs, ad::Tensor states, const ad::ParamStore& params,
                        const NmpnnConfig& config, const std::string& level, int steps,
                        const Dropout* dropout) {
  if (states.rows() == 0) throw EmptyGraph(level + " graph has no nodes");
  if (states.cols() != config.dim) {
    throw DimMismatch(level + " states have width " + std::to_string(states.cols()) +
                      ", model dim is " + std::to_string(config.dim));
  }
  if (static_cast<int>(nbrs.size()) != states.rows()) {
    throw DimMismatch(level + " adjacency covers " + std::to_string(nbrs.size()) +
                      " nodes, states have " + std::to_string(states.rows()));
  }
  for (int t = 0; t < steps; ++t) {
    const auto& w_self = params.get(pname(level, t, "w_self"));
    const auto& w_nbr = params.get(pname(level, t, "w_nbr"));
    const auto& bias = params.get(pname(level, t, "bias"));
    ad::Tensor message;
    if (config.aggregator == Aggregator::Gat) {
      message = gat_messages(nbrs, ad::matmul(states, w_nbr), params.get(pname(level, t, "attn")));
    } else {
      // mean(h_u) W == mean(h_u W); aggregating first is cheaper.
      message = ad::matmul(ad::gather_mean(states, nbrs), w_nbr);
    }
    states = ad::relu(ad::add(ad::add(ad::matmul(states, w_self), message), bias));
    if (dropout != nullptr && dropout->rng != nullptr && dropout->rate > 0.0) {
      states = ad::dropout(states, dropout->rate, *dropout->rng);
    }
  }
  return states;
}

ad::Tensor ast_pass(const Neighbors& nbrs, const ad::Tensor& init, const ad::ParamStore& params,
                    const NmpnnConfig& config, const Dropout* dropout) {
  return message_pass(nbrs, init, params, config, "ast", config.t_ast, dropout);
}

ad::Tensor pool(const ad::Tensor& states, Pooling mode) {
  if (!states.defined() || states.rows() == 0) throw EmptyGraph("cannot pool zero nodes");
  return mode == Pooling::Mean ? ad::mean_rows(states) : ad::sum_rows(states);
}

ad::Tensor stack_rows(const std::vector<feat::Vector>& rows, int dim) {
  std::vector<double> data;
  data.reserve(rows.size() * static_cast<std::size_t>(dim));
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != dim) {
      throw DimMismatch("embedding of width " + std::to_string(r.size()) + ", expected " +
                        std::to_string(dim));
    }
    data.insert(data.end(), r.begin(), r.end());
  }
  return ad::Tensor(static_cast<int>(rows.size()), dim, std::move(data));
}

Encoding encode_sql(const NestedGraph& graph, const feat::NodeEmbeddings& embeddings,
                    const ad::ParamStore& params, const NmpnnConfig& config,
                    const Dropout* dropout) {
  if (graph.lp.empty()) throw EmptyGraph("logical plan has no nodes");
  if (embeddings.size() != graph.ast.size() || graph.ast.size() != graph.lp.size()) {
    throw DimMismatch("embeddings cover " + std::to_string(embeddings.size()) +
                      " LP nodes, plan has " + std::to_string(graph.lp.size()));
  }
  std::vector<ad::Tensor> lp_init;
  lp_init.reserve(graph.lp.size());
  for (std::size_t i = 0; i < graph.ast.size(); ++i) {
    if (embeddings[i].size() != graph.ast[i].size()) {
      throw DimMismatch("LP node " + std::to_string(i) + ": " +
                        std::to_string(embeddings[i].size()) + " embeddings for " +
                        std::to_string(graph.ast[i].size()) + " AST nodes");
    }
    const auto states = ast_pass(graph.ast[i], stack_rows(embeddings[i], config.dim), params,
                                 config, dropout);
    lp_init.push_back(pool(states, config.pooling));
  }
  auto lp_states = message_pass(graph.lp, ad::concat_rows(lp_init), params, config, "lp",
                                config.t_lp, dropout);
  auto h_sql = pool(lp_states, config.pooling);
  return {std::move(h_sql), std::move(lp_states)};
}

Encoding encode_sql(const hir::Hir& hir, const feat::NodeEmbeddings& embeddings,
                    const ad::ParamStore& params, const NmpnnConfig& config,
                    const Dropout* dropout) {
  return encode_sql(nested_graph(hir), embeddings, params, config, dropout);
}

}  // namespace sqlsv::nmpnn
