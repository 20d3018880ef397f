#include "sqlsv/autograd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sqlsv/errors.hpp"

namespace sqlsv::ad {

namespace {

using detail::Node;

std::string shape_str(const Tensor& t) {
  return "(" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ")";
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeMismatch(std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
}

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NonFiniteValue(std::string(op) + " produced a non-finite value");
  }
}

// Builds an output node; `backward` only runs when some input needs grad.
Tensor make_result(const char* op, int rows, int cols, std::vector<double> data,
                   std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
  check_finite(data, op);
  auto node = std::make_shared<Node>();
  node->rows = rows;
  node->cols = cols;
  node->data = std::move(data);
  for (const auto& in : inputs) {
    if (in.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->parents.reserve(inputs.size());
    for (const auto& in : inputs) node->parents.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

Node* grad_target(const Tensor& t) {
  if (!t.requires_grad()) return nullptr;
  Node* n = t.node().get();
  n->ensure_grad();
  return n;
}

}  // namespace

Tensor::Tensor(int rows, int cols, std::vector<double> data, bool requires_grad) {
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows) * cols) {
    throw ShapeMismatch("data length " + std::to_string(data.size()) + " does not match " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  }
  check_finite(data, "tensor construction");
  node_ = std::make_shared<Node>();
  node_->rows = rows;
  node_->cols = cols;
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  return Tensor(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0),
                requires_grad);
}

Tensor Tensor::row(std::span<const double> values, bool requires_grad) {
  return Tensor(1, static_cast<int>(values.size()),
                std::vector<double>(values.begin(), values.end()), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(1, 1, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeMismatch("item() on " + shape_str(*this));
  return node_->data[0];
}

std::vector<double> Tensor::row_values(int r) const {
  const auto begin = node_->data.begin() + static_cast<std::ptrdiff_t>(r) * cols();
  return {begin, begin + cols()};
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

Tensor Tensor::clone(bool requires_grad) const {
  return Tensor(rows(), cols(), node_->data, requires_grad);
}

void Tensor::backward() const {
  if (numel() != 1) throw ShapeMismatch("backward() needs a scalar, got " + shape_str(*this));
  if (!requires_grad()) return;
  // Iterative post-order DFS gives a topological order of the tape.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
    }
  }
  for (Node* n : order) check_finite(n->grad, "backward");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  const auto& A = a.data();
  const auto& B = b.data();
  for (int i = 0; i < m; ++i) {
    double* orow = out.data() + static_cast<std::ptrdiff_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = A[static_cast<std::size_t>(i * k + p)];
      if (av == 0.0) continue;
      const double* brow = B.data() + static_cast<std::ptrdiff_t>(p) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return make_result("matmul", m, n, std::move(out), {a, b}, [a, b, m, k, n](Node& self) {
    const auto& G = self.grad;
    if (Node* ga = grad_target(a)) {
      const auto& B = b.data();
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += G[static_cast<std::size_t>(i * n + j)] * B[static_cast<std::size_t>(p * n + j)];
          ga->grad[static_cast<std::size_t>(i * k + p)] += s;
        }
    }
    if (Node* gb = grad_target(b)) {
      const auto& A = a.data();
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          const double av = A[static_cast<std::size_t>(i * k + p)];
          if (av == 0.0) continue;
          for (int j = 0; j < n; ++j)
            gb->grad[static_cast<std::size_t>(p * n + j)] += av * G[static_cast<std::size_t>(i * n + j)];
        }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const int r = a.rows(), c = a.cols();
  enum class Mode { Same, Row, Scalar } mode;
  if (b.rows() == r && b.cols() == c) {
    mode = Mode::Same;
  } else if (b.rows() == 1 && b.cols() == c) {
    mode = Mode::Row;
  } else if (b.rows() == 1 && b.cols() == 1) {
    mode = Mode::Scalar;
  } else {
    mismatch("add", a, b);
  }
  auto b_index = [mode, c](std::size_t i) -> std::size_t {
    switch (mode) {
      case Mode::Same: return i;
      case Mode::Row: return i % static_cast<std::size_t>(c);
      case Mode::Scalar: return 0;
    }
    return 0;
  };
  std::vector<double> out(a.data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.data()[b_index(i)];
  return make_result("add", r, c, std::move(out), {a, b}, [a, b, b_index](Node& self) {
    if (Node* ga = grad_target(a)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga->grad[i] += self.grad[i];
    }
    if (Node* gb = grad_target(b)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb->grad[b_index(i)] += self.grad[i];
    }
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) mismatch("hadamard", a, b);
  std::vector<double> out(a.data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.data()[i];
  return make_result("hadamard", a.rows(), a.cols(), std::move(out), {a, b}, [a, b](Node& self) {
    if (Node* ga = grad_target(a)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga->grad[i] += self.grad[i] * b.data()[i];
    }
    if (Node* gb = grad_target(b)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb->grad[i] += self.grad[i] * a.data()[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data());
  for (double& x : out) x *= factor;
  return make_result("scale", a.rows(), a.cols(), std::move(out), {a}, [a, factor](Node& self) {
    if (Node* ga = grad_target(a)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga->grad[i] += self.grad[i] * factor;
    }
  });
}

Tensor relu(const Tensor& a) { return leaky_relu(a, 0.0); }

Tensor leaky_relu(const Tensor& a, double slope) {
  std::vector<double> out(a.data());
  for (double& x : out) x = x > 0.0 ? x : slope * x;
  return make_result("relu", a.rows(), a.cols(), std::move(out), {a}, [a, slope](Node& self) {
    if (Node* ga = grad_target(a)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        ga->grad[i] += self.grad[i] * (a.data()[i] > 0.0 ? 1.0 : slope);
      }
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.data());
  for (double& x : out) {
    x = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  auto y = out;
  return make_result("sigmoid", a.rows(), a.cols(), std::move(out), {a},
                     [a, y = std::move(y)](Node& self) {
                       if (Node* ga = grad_target(a)) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           ga->grad[i] += self.grad[i] * y[i] * (1.0 - y[i]);
                         }
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  const int r = a.rows(), c = a.cols();
  std::vector<double> out(a.numel());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[static_cast<std::size_t>(j * r + i)] = a.at(i, j);
  return make_result("transpose", c, r, std::move(out), {a}, [a, r, c](Node& self) {
    if (Node* ga = grad_target(a)) {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          ga->grad[static_cast<std::size_t>(i * c + j)] += self.grad[static_cast<std::size_t>(j * r + i)];
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  const int r = a.rows(), c = a.cols();
  std::vector<double> out(a.data());
  for (int i = 0; i < r; ++i) {
    double* row = out.data() + static_cast<std::ptrdiff_t>(i) * c;
    const double mx = *std::max_element(row, row + c);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int j = 0; j < c; ++j) row[j] /= sum;
  }
  auto y = out;
  return make_result("softmax", r, c, std::move(out), {a}, [a, r, c, y = std::move(y)](Node& self) {
    if (Node* ga = grad_target(a)) {
      for (int i = 0; i < r; ++i) {
        double dot = 0.0;
        for (int j = 0; j < c; ++j) {
          const auto k = static_cast<std::size_t>(i * c + j);
          dot += self.grad[k] * y[k];
        }
        for (int j = 0; j < c; ++j) {
          const auto k = static_cast<std::size_t>(i * c + j);
          ga->grad[k] += y[k] * (self.grad[k] - dot);
        }
      }
    }
  });
}

namespace {

// Order-independent sum: sorting first makes the rounding sequence a function
// of the multiset of values alone.
double sorted_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

Tensor reduce_rows(const Tensor& a, bool mean) {
  const int r = a.rows(), c = a.cols();
  if (r == 0) throw ShapeMismatch("row reduction over zero rows");
  const double f = mean ? 1.0 / r : 1.0;
  std::vector<double> out(static_cast<std::size_t>(c), 0.0);
  std::vector<double> column(static_cast<std::size_t>(r));
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) column[static_cast<std::size_t>(i)] = a.at(i, j);
    out[static_cast<std::size_t>(j)] = mean ? sorted_sum(column) / r : sorted_sum(column);
  }
  return make_result(mean ? "mean_rows" : "sum_rows", 1, c, std::move(out), {a},
                     [a, r, c, f](Node& self) {
                       if (Node* ga = grad_target(a)) {
                         for (int i = 0; i < r; ++i)
                           for (int j = 0; j < c; ++j)
                             ga->grad[static_cast<std::size_t>(i * c + j)] += self.grad[static_cast<std::size_t>(j)] * f;
                       }
                     });
}

}  // namespace

Tensor gather_mean(const Tensor& a, const std::vector<std::vector<int>>& nbrs) {
  const int n = static_cast<int>(nbrs.size()), c = a.cols();
  std::vector<double> out(static_cast<std::size_t>(n) * c, 0.0);
  std::vector<double> column;
  for (int v = 0; v < n; ++v) {
    const auto& nb = nbrs[static_cast<std::size_t>(v)];
    if (nb.empty()) continue;
    for (int u : nb) {
      if (u < 0 || u >= a.rows()) throw ShapeMismatch("gather_mean: neighbor index out of range");
    }
    column.resize(nb.size());
    for (int j = 0; j < c; ++j) {
      for (std::size_t k = 0; k < nb.size(); ++k) column[k] = a.at(nb[k], j);
      out[static_cast<std::size_t>(v * c + j)] = sorted_sum(column) / static_cast<double>(nb.size());
    }
  }
  return make_result("gather_mean", n, c, std::move(out), {a}, [a, nbrs, c](Node& self) {
    if (Node* ga = grad_target(a)) {
      for (std::size_t v = 0; v < nbrs.size(); ++v) {
        const auto& nb = nbrs[v];
        if (nb.empty()) continue;
        const double f = 1.0 / static_cast<double>(nb.size());
        for (int u : nb)
          for (int j = 0; j < c; ++j)
            ga->grad[static_cast<std::size_t>(u * c + j)] += self.grad[v * static_cast<std::size_t>(c) + static_cast<std::size_t>(j)] * f;
      }
    }
  });
}

Tensor mean_rows(const Tensor& a) { return reduce_rows(a, true); }
Tensor sum_rows(const Tensor& a) { return reduce_rows(a, false); }

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols of nothing");
  const int r = parts[0].rows();
  int c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) mismatch("concat_cols", parts[0], p);
    c += p.cols();
  }
  std::vector<double> out(static_cast<std::size_t>(r) * c);
  int offset = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < p.cols(); ++j) out[static_cast<std::size_t>(i * c + offset + j)] = p.at(i, j);
    offset += p.cols();
  }
  return make_result("concat_cols", r, c, std::move(out), parts, [parts, r, c](Node& self) {
    int off = 0;
    for (const auto& p : parts) {
      if (Node* gp = grad_target(p)) {
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < p.cols(); ++j)
            gp->grad[static_cast<std::size_t>(i * p.cols() + j)] += self.grad[static_cast<std::size_t>(i * c + off + j)];
      }
      off += p.cols();
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_rows of nothing");
  const int c = parts[0].cols();
  int r = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) mismatch("concat_rows", parts[0], p);
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(r) * c);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result("concat_rows", r, c, std::move(out), parts, [parts](Node& self) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      if (Node* gp = grad_target(p)) {
        for (std::size_t i = 0; i < p.numel(); ++i) gp->grad[i] += self.grad[off + i];
      }
      off += p.numel();
    }
  });
}

Tensor select_row(const Tensor& a, int r) {
  if (r < 0 || r >= a.rows()) throw ShapeMismatch("select_row " + std::to_string(r) + " of " + shape_str(a));
  const int c = a.cols();
  return make_result("select_row", 1, c, a.row_values(r), {a}, [a, r, c](Node& self) {
    if (Node* ga = grad_target(a)) {
      for (int j = 0; j < c; ++j) ga->grad[static_cast<std::size_t>(r * c + j)] += self.grad[static_cast<std::size_t>(j)];
    }
  });
}

Tensor bce_loss(const Tensor& pred, std::span<const double> targets) {
  if (targets.size() != pred.numel()) {
    throw ShapeMismatch("bce_loss: " + shape_str(pred) + " vs " + std::to_string(targets.size()) +
                        " targets");
  }
  const double n = static_cast<double>(pred.numel());
  std::vector<double> y(targets.begin(), targets.end());
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = std::clamp(pred.data()[i], kBceClamp, 1.0 - kBceClamp);
    loss -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  return make_result("bce_loss", 1, 1, {loss / n}, {pred}, [pred, y, n](Node& self) {
    if (Node* gp = grad_target(pred)) {
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double raw = pred.data()[i];
        if (raw < kBceClamp || raw > 1.0 - kBceClamp) continue;  // clamp has zero slope
        gp->grad[i] += self.grad[0] * (-(y[i] / raw) + (1.0 - y[i]) / (1.0 - raw)) / n;
      }
    }
  });
}

Tensor bce_loss(const Tensor& pred, double target) {
  const double t[1] = {target};
  return bce_loss(pred, std::span<const double>(t, 1));
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw ShapeMismatch("dropout rate must be < 1");
  std::vector<double> mask(a.numel());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < rate ? 0.0 : keep_scale;
  }
  return hadamard(a, Tensor(a.rows(), a.cols(), std::move(mask)));
}

// ---- ParamStore -------------------------------------------------------------

void ParamStore::add(const std::string& name, Tensor t) {
  if (!params_.emplace(name, std::move(t)).second) {
    throw ShapeMismatch("duplicate parameter name: " + name);
  }
}

const Tensor& ParamStore::get(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw ShapeMismatch("no parameter named " + name);
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  const auto it = params_.find(name);
  if (it == params_.end()) throw ShapeMismatch("no parameter named " + name);
  return it->second;
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& [name, t] : params_) out.add(name, t.clone(true));
  return out;
}

void ParamStore::assign(const ParamStore& other) {
  for (auto& [name, t] : params_) {
    const auto& src = other.get(name);
    if (src.rows() != t.rows() || src.cols() != t.cols()) mismatch("assign", t, src);
    t.mutable_data() = src.data();
  }
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.params_.size() != b.params_.size()) return false;
  auto it = b.params_.begin();
  for (const auto& [name, t] : a.params_) {
    if (name != it->first || t.rows() != it->second.rows() || t.cols() != it->second.cols() ||
        t.data() != it->second.data()) {
      return false;
    }
    ++it;
  }
  return true;
}

// ---- AdamW ------------------------------------------------------------------

void AdamW::step(ParamStore& params) {
  ++step_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
  for (auto& [name, t] : params) {
    auto& [m, v] = moments_[name];
    if (m.size() != t.numel()) {
      m.assign(t.numel(), 0.0);
      v.assign(t.numel(), 0.0);
    }
    const auto& g = t.grad();
    auto& w = t.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= options_.lr * options_.weight_decay * w[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
    }
  }
}

// ---- gradient check ---------------------------------------------------------

double finite_diff_check(const std::function<Tensor(ParamStore&)>& f, ParamStore& params,
                         double eps) {
  if (!(eps > 0.0) || eps > 1e-3) throw InvalidArgument("eps must lie in (0, 1e-3]");
  params.zero_grad();
  const Tensor loss = f(params);
  if (!std::isfinite(loss.item())) throw NonFiniteValue("objective is not finite");
  loss.backward();

  double worst = 0.0;
  for (auto& [name, t] : params) {
    const std::vector<double> analytic = t.grad();
    auto& w = t.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + eps;
      const double up = f(params).item();
      w[i] = orig - eps;
      const double down = f(params).item();
      w[i] = orig;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NonFiniteValue("objective not finite under perturbation of " + name);
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace sqlsv::ad
