// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pkgcap/rng.hpp"
#include "pkgcap/tensor.hpp"

namespace pkgcap {

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor uniform_init(std::vector<std::int64_t> shape, std::int64_t fan_in, Rng& rng);

struct AttentionParams {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
  static AttentionParams init(std::int64_t d, Rng& rng);
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Var>>& out) const;
};

struct FeedForwardParams {
  Var w1, b1, w2, b2;
  static FeedForwardParams init(std::int64_t d, std::int64_t d_ff, Rng& rng);
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Var>>& out) const;
};

struct LayerNormParams {
  Var gain, bias;
  static LayerNormParams init(std::int64_t d);
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Var>>& out) const;
};

// Scaled dot-product attention with per-head learned projections. Scale is
// 1/sqrt(d/heads). The causal mask forbids attending to later positions and
// requires query and key counts to match.
Var multi_head_attention(const Var& query, const Var& key, const Var& value, int heads,
                         const AttentionParams& p, bool causal = false);

// Two-layer network: rectified first linear, then second linear.
Var feed_forward(const Var& x, const FeedForwardParams& p);

Var layer_norm(const Var& x, const LayerNormParams& p);

class Adam {
 public:
  Adam(std::vector<Var> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8, double weight_decay = 0.0);
  void step();
  void zero_grad();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  std::int64_t t_ = 0;
};

}  // namespace pkgcap
