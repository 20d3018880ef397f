#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlsv/autograd/tensor.hpp"
#include "sqlsv/featurize/featurize.hpp"
#include "sqlsv/hir/hir.hpp"
#include "sqlsv/nmpnn/nmpnn.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::validator {

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-4;
  int batch_size = 32;
  double dropout = 0.3;  // fusion-head hidden layers, training only
  int patience = 5;
  int max_epochs = 100;
  std::uint64_t seed = 2025;

  void validate() const;  // throws InvalidArgument
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Trained (or freshly initialized) validator: encoder and fusion head
// parameters plus the decision threshold chosen on validation data.
struct Model {
  nmpnn::NmpnnConfig nmpnn;
  TrainConfig train;
  ad::ParamStore params;
  double threshold = 0.5;
  nlohmann::json meta = nlohmann::json::object();
};

// Encoder parameters followed by "head.w1|b1|w2|b2|w3|b3" (3d -> d -> d -> 1).
Model init_model(const nmpnn::NmpnnConfig& nmpnn, const TrainConfig& train);
void init_head(ad::ParamStore& params, int dim, std::mt19937_64& rng);

// One question/SQL pair with everything the network consumes precomputed.
struct EncodedExample {
  feat::Vector question;
  hir::Hir hir;
  nmpnn::NestedGraph graph;
  feat::NodeEmbeddings nodes;
  int label = 0;  // 1 = invalid
};

// parse -> lower -> HIR -> embeddings. Throws the frontend's errors.
EncodedExample encode_example(const std::string& question, const std::string& sql,
                              const sql::Schema& schema, const feat::EmbeddingProvider& provider,
                              feat::EmbeddingCache* cache, int label = 0);

// MLP([h_q; h; h_q (.) h]) for each row pair; h_q and h are B x d. Returns B x 1.
ad::Tensor fusion_head(const ad::ParamStore& params, const ad::Tensor& h_q, const ad::Tensor& h,
                       const nmpnn::Dropout* dropout = nullptr);

// Probability that the pair is INVALID.
double predict(const Model& model, const feat::Vector& h_question, const hir::Hir& hir,
               const feat::NodeEmbeddings& embeddings);
double predict(const Model& model, const EncodedExample& example);
std::vector<double> predict_all(const Model& model, const std::vector<EncodedExample>& examples);

// Differentiable score of one example (training and gradient checks).
ad::Tensor score_tensor(const ad::ParamStore& params, const nmpnn::NmpnnConfig& config,
                        const EncodedExample& example, const nmpnn::Dropout* encoder_dropout,
                        const nmpnn::Dropout* head_dropout);

struct TrainLog {
  std::vector<double> epoch_loss;           // mean training loss per epoch
  std::vector<double> val_auroc;            // per epoch
  std::vector<double> first_epoch_batches;  // batch losses of epoch 1
};

// Mini-batch BCE with AdamW, early stopping on validation AUROC. Returns the
// best-epoch parameters with a threshold chosen on `val`. Throws
// DegenerateValidation when `val` lacks a class, InvalidArgument when empty.
Model train(const std::vector<EncodedExample>& train_set,
            const std::vector<EncodedExample>& val_set, const nmpnn::NmpnnConfig& nmpnn,
            const TrainConfig& config, TrainLog* log = nullptr);

// Candidate grid {0, 1, midpoints of adjacent distinct scores}; returns the
// F1-maximizing candidate, ties to the larger threshold. Throws
// DegenerateValidation when there are no positives.
double select_threshold(const std::vector<double>& scores, const std::vector<int>& labels);

struct NodeScore {
  int lp_node = 0;
  std::string op;
  std::string sub_sql;
  double score = 0.0;
};

struct Localization {
  std::vector<NodeScore> nodes;
  int argmax = 0;
  nlohmann::json payload() const;  // {nodes:[{lp_node, op, sub_sql, score}], argmax}
};

// Fusion head applied to [h_q; h_i; h_q (.) h_i] for every final LP state h_i.
std::vector<double> localize_scores(const Model& model, const feat::Vector& h_question,
                                    const nmpnn::NestedGraph& graph,
                                    const feat::NodeEmbeddings& embeddings);
Localization localize(const Model& model, const feat::Vector& h_question, const hir::Hir& hir,
                      const feat::NodeEmbeddings& embeddings, const sql::Schema& schema);

inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_to_json(const Model& model);
Model checkpoint_from_json(const nlohmann::json& j);  // throws CheckpointError
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace sqlsv::validator
