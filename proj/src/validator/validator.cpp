#include "sqlsv/validator/validator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sqlsv/errors.hpp"
#include "sqlsv/metrics/metrics.hpp"
#include "sqlsv/plan/logical_plan.hpp"
#include "sqlsv/sql/parser.hpp"
#include "sqlsv/sql/render.hpp"

namespace sqlsv::validator {

namespace {

ad::Tensor glorot(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (double& x : data) x = (2.0 * nmpnn::uniform01(rng) - 1.0) * limit;
  return ad::Tensor(rows, cols, std::move(data), true);
}

ad::Tensor repeat_row(const ad::Tensor& row, int times) {
  return ad::concat_rows(std::vector<ad::Tensor>(static_cast<std::size_t>(times), row));
}

void check_question(const Model& model, const feat::Vector& h_q) {
  if (static_cast<int>(h_q.size()) != model.nmpnn.dim) {
    throw DimMismatch("question embedding has width " + std::to_string(h_q.size()) +
                      ", model dim is " + std::to_string(model.nmpnn.dim));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("lr must be positive");
  if (weight_decay < 0.0) throw InvalidArgument("weight_decay must be nonnegative");
  if (batch_size < 1) throw InvalidArgument("batch_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
  if (patience < 1) throw InvalidArgument("patience must be at least 1");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lr", lr},           {"weight_decay", weight_decay}, {"batch_size", batch_size},
          {"dropout", dropout}, {"patience", patience},         {"max_epochs", max_epochs},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "lr") c.lr = value.get<double>();
    else if (key == "weight_decay") c.weight_decay = value.get<double>();
    else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "dropout") c.dropout = value.get<double>();
    else if (key == "patience") c.patience = value.get<int>();
    else if (key == "max_epochs") c.max_epochs = value.get<int>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw InvalidArgument("unknown train key: " + key);
  }
  c.validate();
  return c;
}

void init_head(ad::ParamStore& params, int dim, std::mt19937_64& rng) {
  params.add("head.w1", glorot(3 * dim, dim, rng));
  params.add("head.b1", ad::Tensor::zeros(1, dim, true));
  params.add("head.w2", glorot(dim, dim, rng));
  params.add("head.b2", ad::Tensor::zeros(1, dim, true));
  params.add("head.w3", glorot(dim, 1, rng));
  params.add("head.b3", ad::Tensor::zeros(1, 1, true));
}

Model init_model(const nmpnn::NmpnnConfig& nmpnn, const TrainConfig& train) {
  nmpnn.validate();
  train.validate();
  Model m;
  m.nmpnn = nmpnn;
  m.train = train;
  std::mt19937_64 rng(train.seed);
  nmpnn::init_params(m.params, nmpnn, rng);
  init_head(m.params, nmpnn.dim, rng);
  return m;
}

EncodedExample encode_example(const std::string& question, const std::string& sql,
                              const sql::Schema& schema, const feat::EmbeddingProvider& provider,
                              feat::EmbeddingCache* cache, int label) {
  const auto ast = sql::parse(sql, schema);
  EncodedExample ex;
  ex.hir = hir::build_hir(plan::lower(ast, schema), schema);
  ex.graph = nmpnn::nested_graph(ex.hir);
  ex.nodes = feat::embed_hir(ex.hir, schema, sql::render(ast), provider, cache);
  ex.question = feat::embed_question(question, schema, provider, cache);
  ex.label = label;
  return ex;
}

ad::Tensor fusion_head(const ad::ParamStore& params, const ad::Tensor& h_q, const ad::Tensor& h,
                       const nmpnn::Dropout* dropout) {
  auto drop = [&](ad::Tensor t) {
    if (dropout != nullptr && dropout->rng != nullptr && dropout->rate > 0.0) {
      return ad::dropout(t, dropout->rate, *dropout->rng);
    }
    return t;
  };
  const auto x = ad::concat_cols({h_q, h, ad::hadamard(h_q, h)});
  auto z = drop(ad::relu(ad::add(ad::matmul(x, params.get("head.w1")), params.get("head.b1"))));
  z = drop(ad::relu(ad::add(ad::matmul(z, params.get("head.w2")), params.get("head.b2"))));
  return ad::sigmoid(ad::add(ad::matmul(z, params.get("head.w3")), params.get("head.b3")));
}

ad::Tensor score_tensor(const ad::ParamStore& params, const nmpnn::NmpnnConfig& config,
                        const EncodedExample& example, const nmpnn::Dropout* encoder_dropout,
                        const nmpnn::Dropout* head_dropout) {
  const auto enc = nmpnn::encode_sql(example.graph, example.nodes, params, config, encoder_dropout);
  const auto h_q = nmpnn::stack_rows({example.question}, config.dim);
  return fusion_head(params, h_q, enc.h_sql, head_dropout);
}

double predict(const Model& model, const feat::Vector& h_question, const hir::Hir& hir,
               const feat::NodeEmbeddings& embeddings) {
  check_question(model, h_question);
  const auto enc = nmpnn::encode_sql(hir, embeddings, model.params, model.nmpnn);
  const auto h_q = nmpnn::stack_rows({h_question}, model.nmpnn.dim);
  return fusion_head(model.params, h_q, enc.h_sql).item();
}

double predict(const Model& model, const EncodedExample& example) {
  check_question(model, example.question);
  return score_tensor(model.params, model.nmpnn, example, nullptr, nullptr).item();
}

std::vector<double> predict_all(const Model& model, const std::vector<EncodedExample>& examples) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(predict(model, ex));
  return out;
}

double select_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  if (std::find(labels.begin(), labels.end(), 1) == labels.end()) {
    throw DegenerateValidation("threshold selection needs at least one positive");
  }
  std::vector<double> distinct(scores);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> candidates{0.0, 1.0};
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    candidates.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
  }
  std::sort(candidates.begin(), candidates.end());
  const metrics::ScoredLabels sl{scores, labels};
  double best_t = candidates.front();
  double best_f1 = -1.0;
  for (double t : candidates) {
    const double f = metrics::f1(sl, t);
    if (f >= best_f1) {  // ascending order, so ">=" keeps the larger threshold
      best_f1 = f;
      best_t = t;
    }
  }
  return best_t;
}

Model train(const std::vector<EncodedExample>& train_set,
            const std::vector<EncodedExample>& val_set, const nmpnn::NmpnnConfig& nmpnn_config,
            const TrainConfig& config, TrainLog* log) {
  if (train_set.empty() || val_set.empty()) throw InvalidArgument("train and val must be nonempty");
  std::vector<int> val_labels;
  for (const auto& ex : val_set) val_labels.push_back(ex.label);
  const bool has_pos = std::count(val_labels.begin(), val_labels.end(), 1) > 0;
  const bool has_neg = std::count(val_labels.begin(), val_labels.end(), 0) > 0;
  if (!has_pos || !has_neg) {
    throw DegenerateValidation("validation set must contain both classes");
  }

  Model model = init_model(nmpnn_config, config);
  ad::AdamW optimizer({config.lr, config.weight_decay, 0.9, 0.999, 1e-8});
  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  const nmpnn::Dropout enc_drop{nmpnn_config.dropout, &rng};
  const nmpnn::Dropout head_drop{config.dropout, &rng};

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  ad::ParamStore best = model.params.clone();
  double best_auroc = -1.0;
  int best_epoch = 0;
  int epoch = 0;
  nlohmann::json epoch_loss = nlohmann::json::array();
  nlohmann::json epoch_auroc = nlohmann::json::array();

  while (epoch < config.max_epochs) {
    ++epoch;
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(nmpnn::uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<ad::Tensor> preds;
      std::vector<double> targets;
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = train_set[order[k]];
        preds.push_back(score_tensor(model.params, nmpnn_config, ex, &enc_drop, &head_drop));
        targets.push_back(static_cast<double>(ex.label));
      }
      model.params.zero_grad();
      const auto loss = ad::bce_loss(ad::concat_rows(preds), targets);
      loss.backward();
      optimizer.step(model.params);
      loss_sum += loss.item() * static_cast<double>(end - start);
      if (log != nullptr && epoch == 1) log->first_epoch_batches.push_back(loss.item());
    }
    const double mean_loss = loss_sum / static_cast<double>(train_set.size());
    const double auc = metrics::auroc({predict_all(model, val_set), val_labels});
    epoch_loss.push_back(mean_loss);
    epoch_auroc.push_back(auc);
    if (log != nullptr) {
      log->epoch_loss.push_back(mean_loss);
      log->val_auroc.push_back(auc);
    }
    if (auc > best_auroc) {
      best_auroc = auc;
      best_epoch = epoch;
      best.assign(model.params);
    } else if (epoch - best_epoch >= config.patience) {
      break;
    }
  }

  model.params.assign(best);
  model.threshold = select_threshold(predict_all(model, val_set), val_labels);
  model.meta = {{"epochs_run", epoch},
                {"best_epoch", best_epoch},
                {"best_val_auroc", best_auroc},
                {"train_size", train_set.size()},
                {"val_size", val_set.size()},
                {"epoch_loss", epoch_loss},
                {"val_auroc", epoch_auroc}};
  return model;
}

std::vector<double> localize_scores(const Model& model, const feat::Vector& h_question,
                                    const nmpnn::NestedGraph& graph,
                                    const feat::NodeEmbeddings& embeddings) {
  check_question(model, h_question);
  const auto enc = nmpnn::encode_sql(graph, embeddings, model.params, model.nmpnn);
  const int n = enc.lp_states.rows();
  const auto h_q = repeat_row(nmpnn::stack_rows({h_question}, model.nmpnn.dim), n);
  return fusion_head(model.params, h_q, enc.lp_states).data();
}

Localization localize(const Model& model, const feat::Vector& h_question, const hir::Hir& hir,
                      const feat::NodeEmbeddings& embeddings, const sql::Schema& schema) {
  const auto scores = localize_scores(model, h_question, nmpnn::nested_graph(hir), embeddings);
  Localization out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& node = hir.plan.node(static_cast<int>(i));
    out.nodes.push_back({node.id, std::string(plan::op_name(node.op)),
                         plan::render_subsql(hir.plan, node.id, schema), scores[i]});
    if (scores[i] > scores[static_cast<std::size_t>(out.argmax)]) out.argmax = node.id;
  }
  return out;
}

nlohmann::json Localization::payload() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes) {
    arr.push_back({{"lp_node", n.lp_node}, {"op", n.op}, {"sub_sql", n.sub_sql}, {"score", n.score}});
  }
  return {{"nodes", arr}, {"argmax", argmax}};
}

// ---- checkpoints -------------------------------------------------------------

nlohmann::json checkpoint_to_json(const Model& model) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, t] : model.params) {
    params[name] = {{"shape", {t.rows(), t.cols()}}, {"data", t.data()}};
  }
  return {{"version", kCheckpointVersion},
          {"config", {{"nmpnn", model.nmpnn.to_json()}, {"train", model.train.to_json()}}},
          {"threshold", model.threshold},
          {"params", params},
          {"meta", model.meta}};
}

Model checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
    }
    Model m;
    m.nmpnn = nmpnn::NmpnnConfig::from_json(j.at("config").at("nmpnn"));
    m.train = TrainConfig::from_json(j.at("config").at("train"));
    m.threshold = j.at("threshold").get<double>();
    m.meta = j.value("meta", nlohmann::json::object());
    for (const auto& [name, entry] : j.at("params").items()) {
      const auto shape = entry.at("shape").get<std::vector<int>>();
      if (shape.size() != 2) throw CheckpointError("parameter " + name + " shape must be 2-D");
      m.params.add(name, ad::Tensor(shape[0], shape[1], entry.at("data").get<std::vector<double>>(), true));
    }
    // The stored tensors must be exactly what this configuration expects.
    Model reference = init_model(m.nmpnn, m.train);
    for (const auto& [name, t] : reference.params) {
      if (!m.params.contains(name)) throw CheckpointError("missing parameter " + name);
      const auto& got = m.params.get(name);
      if (got.rows() != t.rows() || got.cols() != t.cols()) {
        throw CheckpointError("parameter " + name + " has the wrong shape");
      }
    }
    if (m.params.size() != reference.params.size()) {
      throw CheckpointError("checkpoint has unexpected parameters");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CheckpointError(std::string("invalid checkpoint config: ") + e.what());
  } catch (const ShapeMismatch& e) {
    throw CheckpointError(std::string("invalid checkpoint tensor: ") + e.what());
  } catch (const NonFiniteValue& e) {
    throw CheckpointError(std::string("invalid checkpoint tensor: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out << checkpoint_to_json(model).dump() << '\n';
  if (!out) throw CheckpointError("failed writing checkpoint " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint " + path + " is not JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace sqlsv::validator
