#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "omnitraj/nn/tensor.hpp"

namespace omnitraj::nn {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  std::uint64_t mark = 0;

  Tensor& ensure_grad() {
    if (!has_grad()) grad = Tensor(value.rows(), value.cols());
    return grad;
  }
  bool has_grad() const {
    return grad.size() > 0 && grad.rows() == value.rows() && grad.cols() == value.cols();
  }
};

/// Handle to a node in a dynamically built computation graph. Copies share
/// the node. Leaves created with `requires_grad` accumulate gradients across
/// backward passes until `zero_grad`.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  // Mutable access for optimizers and finite-difference checks.
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& grad() { return node_->ensure_grad(); }
  bool has_grad() const { return node_->has_grad(); }
  void zero_grad();

  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  double item() const;

  // Seeds d(this)/d(this) = 1; this must be a 1x1 scalar.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  static Var from_node(std::shared_ptr<Node> n) {
    Var v;
    v.node_ = std::move(n);
    return v;
  }

 private:
  std::shared_ptr<Node> node_;
};

Var parameter(Tensor value);
Var constant(Tensor value);

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- operations -----------------------------------------------------------

Var matmul(const Var& a, const Var& b);          // a * b
Var matmul_nt(const Var& a, const Var& b);       // a * b^T
Var add(const Var& a, const Var& b);             // same shape
Var add_row(const Var& a, const Var& row);       // broadcast 1 x n over rows
Var mul(const Var& a, const Var& b);             // element-wise
Var scale(const Var& a, double s);
Var gelu(const Var& a);                          // exact erf form
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var gather_rows(const Var& table, std::span<const std::int32_t> ids);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
// Row-wise softmax; columns flagged in `key_mask` (non-zero) get -inf scores.
Var softmax_rows(const Var& a, std::span<const char> key_mask = {});
// Rotary embedding on each row; row r uses position positions[r]. Pairs
// element k with element k + cols/2, angle position / base^(2k/cols).
Var rope(const Var& a, std::span<const double> positions, double base = 10000.0);
Var l2_normalize_rows(const Var& a);
// Mean over rows of -log softmax(row)[row index]; logits must be square.
Var cross_entropy_diagonal(const Var& logits);
Var sum_all(const Var& a);

// Forward-only helpers on plain tensors.
Tensor rope_rotate(const Tensor& e, std::span<const double> positions, double base = 10000.0);
Tensor rope_rotate(const Tensor& e, double base = 10000.0);  // positions 0..rows-1

}  // namespace omnitraj::nn
