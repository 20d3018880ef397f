#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sqlsv::ad {

namespace detail {
struct Node {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily, same length as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};
}  // namespace detail

// Dense row-major matrix of doubles participating in a reverse-mode tape.
// Copies share the underlying node; use clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor row(std::span<const double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  std::size_t numel() const { return node_->data.size(); }
  const std::vector<double>& data() const { return node_->data; }
  // Direct write access, meant for parameters (optimizer updates, perturbation).
  std::vector<double>& mutable_data() { return node_->data; }
  double at(int r, int c) const { return node_->data[static_cast<std::size_t>(r * cols() + c)]; }
  double item() const;
  std::vector<double> row_values(int r) const;

  bool requires_grad() const { return node_->requires_grad; }
  // Gradient accumulated by backward(); zeros if none has flowed yet.
  const std::vector<double>& grad() const;
  void zero_grad();

  // Seeds d(self)/d(self) = 1 for a 1x1 tensor and propagates to every input.
  void backward() const;

  // Independent deep copy of data (no graph history).
  Tensor clone(bool requires_grad) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

Tensor matmul(const Tensor& a, const Tensor& b);
// Same shape, or `b` a 1 x cols row broadcast over rows, or `b` 1x1.
Tensor add(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor sigmoid(const Tensor& a);
Tensor transpose(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
// Row reductions r x c -> 1 x c. Each column is summed in ascending value
// order, so the result does not depend on row order (bit for bit).
Tensor mean_rows(const Tensor& a);
Tensor sum_rows(const Tensor& a);
// Row v of the result is the mean of rows nbrs[v] of `a` (zero row when
// nbrs[v] is empty), summed order-independently like mean_rows.
Tensor gather_mean(const Tensor& a, const std::vector<std::vector<int>>& nbrs);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor select_row(const Tensor& a, int r);
// Mean binary cross-entropy over all entries of `pred` against `targets`.
// Predictions are clamped to [1e-7, 1 - 1e-7] before the log.
Tensor bce_loss(const Tensor& pred, std::span<const double> targets);
Tensor bce_loss(const Tensor& pred, double target);
// Inverted dropout: zeroes entries with probability `rate`, rescales the rest.
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng);

inline constexpr double kBceClamp = 1e-7;

// Named parameters with stable (sorted) iteration order.
class ParamStore {
 public:
  void add(const std::string& name, Tensor t);
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;

  void zero_grad();
  // Deep copy; the result owns fresh tensors that require grad.
  ParamStore clone() const;
  // Overwrites values from `other` (same names and shapes).
  void assign(const ParamStore& other);

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::map<std::string, Tensor> params_;
};

// Decoupled-weight-decay Adam.
class AdamW {
 public:
  struct Options {
    double lr = 1e-4;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit AdamW(Options options) : options_(options) {}
  void step(ParamStore& params);
  long steps() const { return step_; }

 private:
  Options options_;
  long step_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

// Compares autograd gradients with central differences over every parameter
// entry. Returns max |a - n| / max(1, |a|, |n|). Throws NonFiniteValue.
double finite_diff_check(const std::function<Tensor(ParamStore&)>& f, ParamStore& params,
                         double eps);

}  // namespace sqlsv::ad
