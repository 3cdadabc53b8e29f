// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "pkgcap/kernels.hpp"

namespace pkgcap {

Tensor uniform_init(std::vector<std::int64_t> shape, std::int64_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

AttentionParams AttentionParams::init(std::int64_t d, Rng& rng) {
  AttentionParams p;
  p.wq = Var::parameter(uniform_init({d, d}, d, rng));
  p.bq = Var::parameter(Tensor::zeros({d}));
  p.wk = Var::parameter(uniform_init({d, d}, d, rng));
  p.bk = Var::parameter(Tensor::zeros({d}));
  p.wv = Var::parameter(uniform_init({d, d}, d, rng));
  p.bv = Var::parameter(Tensor::zeros({d}));
  p.wo = Var::parameter(uniform_init({d, d}, d, rng));
  p.bo = Var::parameter(Tensor::zeros({d}));
  return p;
}

void AttentionParams::collect(const std::string& prefix,
                              std::vector<std::pair<std::string, Var>>& out) const {
  out.emplace_back(prefix + ".wq", wq);
  out.emplace_back(prefix + ".bq", bq);
  out.emplace_back(prefix + ".wk", wk);
  out.emplace_back(prefix + ".bk", bk);
  out.emplace_back(prefix + ".wv", wv);
  out.emplace_back(prefix + ".bv", bv);
  out.emplace_back(prefix + ".wo", wo);
  out.emplace_back(prefix + ".bo", bo);
}

FeedForwardParams FeedForwardParams::init(std::int64_t d, std::int64_t d_ff, Rng& rng) {
  FeedForwardParams p;
  p.w1 = Var::parameter(uniform_init({d, d_ff}, d, rng));
  p.b1 = Var::parameter(Tensor::zeros({d_ff}));
  p.w2 = Var::parameter(uniform_init({d_ff, d}, d_ff, rng));
  p.b2 = Var::parameter(Tensor::zeros({d}));
  return p;
}

void FeedForwardParams::collect(const std::string& prefix,
                                std::vector<std::pair<std::string, Var>>& out) const {
  out.emplace_back(prefix + ".w1", w1);
  out.emplace_back(prefix + ".b1", b1);
  out.emplace_back(prefix + ".w2", w2);
  out.emplace_back(prefix + ".b2", b2);
}

LayerNormParams LayerNormParams::init(std::int64_t d) {
  LayerNormParams p;
  p.gain = Var::parameter(Tensor::full({d}, 1.0));
  p.bias = Var::parameter(Tensor::zeros({d}));
  return p;
}

void LayerNormParams::collect(const std::string& prefix,
                              std::vector<std::pair<std::string, Var>>& out) const {
  out.emplace_back(prefix + ".gain", gain);
  out.emplace_back(prefix + ".bias", bias);
}

namespace {

Var causal_mask(std::int64_t rows) {
  Tensor m({rows, rows});
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = i + 1; j < rows; ++j) m.at(i, j) = -1e9;
  return Var::constant(std::move(m));
}

}  // namespace

Var multi_head_attention(const Var& query, const Var& key, const Var& value, int heads,
                         const AttentionParams& p, bool causal) {
  const std::int64_t d = query.val().cols();
  if (heads <= 0 || d % heads != 0)
    throw std::invalid_argument("multi_head_attention: width " + std::to_string(d) +
                                " not divisible by " + std::to_string(heads) + " heads");
  if (key.val().rows() != value.val().rows())
    throw std::invalid_argument("multi_head_attention: key/value row mismatch");
  if (causal && query.val().rows() != key.val().rows())
    throw std::invalid_argument("multi_head_attention: causal mask needs square scores");

  const std::int64_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Var q = add_rowvec(matmul(query, p.wq), p.bq);
  Var k = add_rowvec(matmul(key, p.wk), p.bk);
  Var v = add_rowvec(matmul(value, p.wv), p.bv);

  Var mask;
  if (causal) mask = causal_mask(query.val().rows());

  Var out;
  for (int h = 0; h < heads; ++h) {
    Var qh = slice_cols(q, h * dh, (h + 1) * dh);
    Var kh = slice_cols(k, h * dh, (h + 1) * dh);
    Var vh = slice_cols(v, h * dh, (h + 1) * dh);
    Var scores = affine(matmul_nt(qh, kh), scale, 0.0);
    if (causal) scores = add(scores, mask);
    Var oh = matmul(softmax_rows(scores), vh);
    out = h == 0 ? oh : concat_cols(out, oh);
  }
  return add_rowvec(matmul(out, p.wo), p.bo);
}

Var feed_forward(const Var& x, const FeedForwardParams& p) {
  return add_rowvec(matmul(relu(add_rowvec(matmul(x, p.w1), p.b1)), p.w2), p.b2);
}

Var layer_norm(const Var& x, const LayerNormParams& p) {
  return layer_norm(x, p.gain, p.bias);
}

Adam::Adam(std::vector<Var> params, double lr, double beta1, double beta2, double eps,
           double weight_decay)
    : params_(std::move(params)),
      lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      weight_decay_(weight_decay) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Tensor::zeros(p.val().shape()));
    v_.push_back(Tensor::zeros(p.val().shape()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& theta = params_[i].mutable_val();
    const Tensor& g = params_[i].grad();
    double* mv = m_[i].data();
    double* vv = v_[i].data();
    for (std::int64_t j = 0; j < theta.numel(); ++j) {
      double gj = g[j] + weight_decay_ * theta[j];
      mv[j] = beta1_ * mv[j] + (1.0 - beta1_) * gj;
      vv[j] = beta2_ * vv[j] + (1.0 - beta2_) * gj * gj;
      double mh = mv[j] / bc1;
      double vh = vv[j] / bc2;
      theta[j] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace pkgcap
