// SPDX-License-Identifier: Apache-2.0
//
// Dense float64 tensors with reverse-mode differentiation.
//
// A Var is a shared handle to a graph node. Ops build the graph as they
// run; backward() walks it in reverse creation order and accumulates
// gradients into every node with requires_grad. Parameter gradients keep
// accumulating across backward() calls until zero_grad().

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pkgcap {

// Row-major. Rank 0 (scalar), 1 (vector) or 2 (matrix).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape);
  Tensor(std::vector<std::int64_t> shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::int64_t> shape);
  static Tensor full(std::vector<std::int64_t> shape, double v);

  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t rows() const;
  std::int64_t cols() const;
  std::int64_t numel() const { return static_cast<std::int64_t>(v_.size()); }
  const std::vector<std::int64_t>& shape() const { return shape_; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double* row(std::int64_t r) { return v_.data() + r * cols(); }
  const double* row(std::int64_t r) const { return v_.data() + r * cols(); }
  double& at(std::int64_t r, std::int64_t c) { return v_[static_cast<std::size_t>(r * cols() + c)]; }
  double at(std::int64_t r, std::int64_t c) const { return v_[static_cast<std::size_t>(r * cols() + c)]; }
  double& operator[](std::int64_t i) { return v_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return v_[static_cast<std::size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  std::string shape_str() const;
  void fill(double v);

 private:
  std::vector<std::int64_t> shape_;
  std::vector<double> v_;
};

namespace ad {

struct Node {
  Tensor val;
  Tensor grad;
  bool requires_grad = false;
  bool has_grad = false;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  // Lazily sized to val's shape, zero-filled.
  Tensor& grad_buf();
  void accumulate(const Tensor& g);
};

// While a guard is alive, ops compute values but record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

}  // namespace ad

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<ad::Node> n) : n_(std::move(n)) {}

  static Var parameter(Tensor t);
  static Var constant(Tensor t);

  bool defined() const { return n_ != nullptr; }
  const Tensor& val() const { return n_->val; }
  Tensor& mutable_val() { return n_->val; }
  bool requires_grad() const { return n_->requires_grad; }
  bool has_grad() const { return n_->has_grad; }
  // Zeros of val's shape if no gradient has been accumulated.
  const Tensor& grad() const;
  void zero_grad();

  const std::shared_ptr<ad::Node>& node() const { return n_; }

 private:
  std::shared_ptr<ad::Node> n_;
};

// Reverse pass from a scalar loss.
void backward(const Var& loss);

// --- primitive differentiable ops ---

Var matmul(const Var& a, const Var& b);
// a[m x k] * b[n x k]^T
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// a[m x n] + v[n] broadcast over rows
Var add_rowvec(const Var& a, const Var& v);
// alpha * a + beta, elementwise
Var affine(const Var& a, double alpha, double beta);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var softmax_rows(const Var& a);
Var layer_norm(const Var& x, const Var& gain, const Var& bias);
Var slice_cols(const Var& a, std::int64_t c0, std::int64_t c1);
Var concat_cols(const Var& a, const Var& b);
// rows of table gathered by id
Var embedding(const Var& table, std::span<const std::int32_t> ids);
Var sum_all(const Var& a);
// column-wise max over rows: [m x n] -> [n]
Var max_over_rows(const Var& a);
// mean over rows of -log softmax(logits)[target]
Var cross_entropy_logits(const Var& logits, std::span<const std::int32_t> targets);
// -(1/Z) sum_t (log p_t[gt_t] + log p_t[pse_t]) over probabilities, log
// clamped at 1e-12. Targets equal to pad_id contribute nothing; Z counts
// rows where either target is live, or all rows when exclude_pad=false.
// pse may be empty (single-target loss).
Var sentence_cross_entropy(const Var& probs, std::span<const std::int32_t> gt,
                           std::span<const std::int32_t> pse, std::int32_t pad_id,
                           bool exclude_pad);
// 1 - cos(a, b) on rank-1 vectors; zero-norm input -> 1 with *degenerate set.
Var cosine_distance(const Var& a, const Var& b, bool* degenerate = nullptr);

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kLogClamp = 1e-12;

}  // namespace pkgcap
