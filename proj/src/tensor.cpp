// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "pkgcap/kernels.hpp"

namespace pkgcap {

namespace {

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dims must be positive");
    n *= d;
  }
  return n;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape)
    : shape_(std::move(shape)), v_(static_cast<std::size_t>(shape_numel(shape_)), 0.0) {}

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), v_(std::move(values)) {
  require(shape_numel(shape_) == static_cast<std::int64_t>(v_.size()),
          "tensor shape does not match value count");
}

Tensor Tensor::scalar(double v) {
  Tensor t;
  t.v_ = {v};
  return t;
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::int64_t> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

std::int64_t Tensor::rows() const { return rank() == 2 ? dim(0) : 1; }

std::int64_t Tensor::cols() const {
  if (rank() == 2) return dim(1);
  if (rank() == 1) return dim(0);
  return 1;
}

bool Tensor::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

void Tensor::fill(double v) { std::fill(v_.begin(), v_.end(), v); }

namespace ad {

namespace {
std::atomic<std::uint64_t> g_seq{0};
thread_local int g_no_grad = 0;
}  // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad; }
NoGradGuard::~NoGradGuard() { --g_no_grad; }

bool grad_enabled() { return g_no_grad == 0; }

Tensor& Node::grad_buf() {
  if (grad.numel() != val.numel()) grad = Tensor::zeros(val.shape());
  return grad;
}

void Node::accumulate(const Tensor& g) {
  Tensor& buf = grad_buf();
  kernels::vadd(buf.data(), g.data(), buf.data(), static_cast<std::size_t>(buf.numel()));
  has_grad = true;
}

namespace {

using NodePtr = std::shared_ptr<Node>;

NodePtr make_node(Tensor val, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->seq = ++g_seq;
  if (grad_enabled()) {
    for (const auto& p : parents)
      if (p && p->requires_grad) {
        n->requires_grad = true;
        break;
      }
  }
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

// Marks the parent as receiving gradient and returns its buffer.
Tensor& grad_into(const NodePtr& p) {
  Tensor& g = p->grad_buf();
  p->has_grad = true;
  return g;
}

bool wants_grad(const NodePtr& p) { return p->requires_grad; }

}  // namespace
}  // namespace ad

using ad::grad_into;
using ad::make_node;
using ad::Node;
using ad::NodePtr;
using ad::wants_grad;

Var Var::parameter(Tensor t) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  n->requires_grad = true;
  n->seq = 0;
  return Var(std::move(n));
}

Var Var::constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  return Var(std::move(n));
}

const Tensor& Var::grad() const { return n_->grad_buf(); }

void Var::zero_grad() {
  if (n_->has_grad) n_->grad.fill(0.0);
  n_->has_grad = false;
}

void backward(const Var& loss) {
  require(loss.defined(), "backward: undefined loss");
  require(loss.val().numel() == 1,
          "backward: loss must be scalar, got shape " + loss.val().shape_str());
  Node* root = loss.node().get();
  if (!root->requires_grad) return;

  std::vector<Node*> postorder;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      postorder.push_back(n);
      stack.pop_back();
    }
  }

  // Fresh pass for interior nodes; leaf parameters keep accumulating.
  for (Node* n : postorder)
    if (n->backprop) {
      if (n->has_grad) n->grad.fill(0.0);
      n->has_grad = false;
    }

  Tensor& seed = root->grad_buf();
  seed[0] += 1.0;
  root->has_grad = true;

  for (auto it = postorder.rbegin(); it != postorder.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->has_grad) n->backprop(*n);
  }
}

// ---- ops ----

Var matmul(const Var& a, const Var& b) {
  const Tensor& ta = a.val();
  const Tensor& tb = b.val();
  require(ta.rank() == 2 && tb.rank() == 2, "matmul: rank-2 inputs required");
  require(ta.cols() == tb.rows(), "matmul: inner dimensions disagree: " + ta.shape_str() +
                                      " vs " + tb.shape_str());
  const std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
  Tensor out({static_cast<std::int64_t>(m), static_cast<std::int64_t>(n)});
  kernels::matmul_nn(ta.data(), tb.data(), out.data(), m, k, n);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    const Tensor& g = self.grad;
    const NodePtr& pa = self.parents[0];
    const NodePtr& pb = self.parents[1];
    if (wants_grad(pa)) {
      Tensor da(pa->val.shape());
      kernels::matmul_nt(g.data(), pb->val.data(), da.data(), m, n, k);
      pa->accumulate(da);
    }
    if (wants_grad(pb)) {
      Tensor db(pb->val.shape());
      kernels::matmul_tn(pa->val.data(), g.data(), db.data(), m, k, n);
      pb->accumulate(db);
    }
  }));
}

Var matmul_nt(const Var& a, const Var& b) {
  const Tensor& ta = a.val();
  const Tensor& tb = b.val();
  require(ta.rank() == 2 && tb.rank() == 2, "matmul_nt: rank-2 inputs required");
  require(ta.cols() == tb.cols(), "matmul_nt: inner dimensions disagree: " + ta.shape_str() +
                                      " vs " + tb.shape_str());
  const std::size_t m = ta.rows(), k = ta.cols(), n = tb.rows();
  Tensor out({static_cast<std::int64_t>(m), static_cast<std::int64_t>(n)});
  kernels::matmul_nt(ta.data(), tb.data(), out.data(), m, k, n);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    const Tensor& g = self.grad;
    const NodePtr& pa = self.parents[0];
    const NodePtr& pb = self.parents[1];
    if (wants_grad(pa)) {
      Tensor da(pa->val.shape());
      kernels::matmul_nn(g.data(), pb->val.data(), da.data(), m, n, k);
      pa->accumulate(da);
    }
    if (wants_grad(pb)) {
      Tensor db(pb->val.shape());
      kernels::matmul_tn(g.data(), pa->val.data(), db.data(), m, n, k);
      pb->accumulate(db);
    }
  }));
}

Var add(const Var& a, const Var& b) {
  require(a.val().same_shape(b.val()), "add: shape mismatch " + a.val().shape_str() + " vs " +
                                           b.val().shape_str());
  Tensor out(a.val().shape());
  const std::size_t n = static_cast<std::size_t>(out.numel());
  kernels::vadd(a.val().data(), b.val().data(), out.data(), n);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [n](Node& self) {
    for (int i = 0; i < 2; ++i) {
      const NodePtr& p = self.parents[static_cast<std::size_t>(i)];
      if (wants_grad(p))
        kernels::vadd(grad_into(p).data(), self.grad.data(), grad_into(p).data(), n);
    }
  }));
}

Var sub(const Var& a, const Var& b) {
  require(a.val().same_shape(b.val()), "sub: shape mismatch " + a.val().shape_str() + " vs " +
                                           b.val().shape_str());
  Tensor out(a.val().shape());
  const std::size_t n = static_cast<std::size_t>(out.numel());
  kernels::vsub(a.val().data(), b.val().data(), out.data(), n);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [n](Node& self) {
    const NodePtr& pa = self.parents[0];
    const NodePtr& pb = self.parents[1];
    if (wants_grad(pa))
      kernels::vadd(grad_into(pa).data(), self.grad.data(), grad_into(pa).data(), n);
    if (wants_grad(pb)) kernels::axpy(-1.0, self.grad.data(), grad_into(pb).data(), n);
  }));
}

Var mul(const Var& a, const Var& b) {
  require(a.val().same_shape(b.val()), "mul: shape mismatch " + a.val().shape_str() + " vs " +
                                           b.val().shape_str());
  Tensor out(a.val().shape());
  const std::size_t n = static_cast<std::size_t>(out.numel());
  kernels::vmul(a.val().data(), b.val().data(), out.data(), n);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [n](Node& self) {
    const NodePtr& pa = self.parents[0];
    const NodePtr& pb = self.parents[1];
    if (wants_grad(pa)) {
      Tensor t(pa->val.shape());
      kernels::vmul(self.grad.data(), pb->val.data(), t.data(), n);
      pa->accumulate(t);
    }
    if (wants_grad(pb)) {
      Tensor t(pb->val.shape());
      kernels::vmul(self.grad.data(), pa->val.data(), t.data(), n);
      pb->accumulate(t);
    }
  }));
}

Var add_rowvec(const Var& a, const Var& v) {
  const Tensor& ta = a.val();
  const Tensor& tv = v.val();
  require(ta.rank() == 2 && tv.rank() == 1 && ta.cols() == tv.dim(0),
          "add_rowvec: shapes " + ta.shape_str() + " vs " + tv.shape_str());
  const std::size_t m = static_cast<std::size_t>(ta.rows());
  const std::size_t n = static_cast<std::size_t>(ta.cols());
  Tensor out(ta.shape());
  for (std::size_t r = 0; r < m; ++r)
    kernels::vadd(ta.row(static_cast<std::int64_t>(r)), tv.data(),
                  out.row(static_cast<std::int64_t>(r)), n);
  return Var(make_node(std::move(out), {a.node(), v.node()}, [m, n](Node& self) {
    const NodePtr& pa = self.parents[0];
    const NodePtr& pv = self.parents[1];
    if (wants_grad(pa))
      kernels::vadd(grad_into(pa).data(), self.grad.data(), grad_into(pa).data(), m * n);
    if (wants_grad(pv)) {
      Tensor& gv = grad_into(pv);
      for (std::size_t r = 0; r < m; ++r)
        kernels::vadd(gv.data(), self.grad.row(static_cast<std::int64_t>(r)), gv.data(), n);
    }
  }));
}

Var affine(const Var& a, double alpha, double beta) {
  Tensor out(a.val().shape());
  const std::size_t n = static_cast<std::size_t>(out.numel());
  kernels::vscale(a.val().data(), alpha, out.data(), n);
  if (beta != 0.0)
    for (std::size_t i = 0; i < n; ++i) out.data()[i] += beta;
  return Var(make_node(std::move(out), {a.node()}, [n, alpha](Node& self) {
    const NodePtr& pa = self.parents[0];
    if (wants_grad(pa)) kernels::axpy(alpha, self.grad.data(), grad_into(pa).data(), n);
  }));
}

Var relu(const Var& a) {
  Tensor out(a.val().shape());
  const std::size_t n = static_cast<std::size_t>(out.numel());
  kernels::vrelu(a.val().data(), out.data(), n);
  return Var(make_node(std::move(out), {a.node()}, [n](Node& self) {
    const NodePtr& pa = self.parents[0];
    if (!wants_grad(pa)) return;
    Tensor& gb = grad_into(pa);
    const double* x = pa->val.data();
    const double* g = self.grad.data();
    for (std::size_t i = 0; i < n; ++i)
      if (x[i] > 0.0) gb.data()[i] += g[i];
  }));
}

Var sigmoid(const Var& a) {
  Tensor out(a.val().shape());
  const std::size_t n = static_cast<std::size_t>(out.numel());
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = 1.0 / (1.0 + std::exp(-a.val().data()[i]));
  return Var(make_node(std::move(out), {a.node()}, [n](Node& self) {
    const NodePtr& pa = self.parents[0];
    if (!wants_grad(pa)) return;
    Tensor& gb = grad_into(pa);
    const double* y = self.val.data();
    const double* g = self.grad.data();
    for (std::size_t i = 0; i < n; ++i) gb.data()[i] += g[i] * y[i] * (1.0 - y[i]);
  }));
}

Var softmax_rows(const Var& a) {
  const Tensor& ta = a.val();
  require(ta.rank() == 2, "softmax_rows: rank-2 input required");
  const std::int64_t m = ta.rows(), n = ta.cols();
  Tensor out(ta.shape());
  for (std::int64_t r = 0; r < m; ++r) {
    const double* x = ta.row(r);
    double* y = out.row(r);
    double mx = kernels::vmax(x, static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j) y[j] = std::exp(x[j] - mx);
    double s = kernels::vsum(y, static_cast<std::size_t>(n));
    kernels::vscale(y, 1.0 / s, y, static_cast<std::size_t>(n));
  }
  return Var(make_node(std::move(out), {a.node()}, [m, n](Node& self) {
    const NodePtr& pa = self.parents[0];
    if (!wants_grad(pa)) return;
    Tensor& gb = grad_into(pa);
    for (std::int64_t r = 0; r < m; ++r) {
      const double* y = self.val.row(r);
      const double* g = self.grad.row(r);
      double* gx = gb.row(r);
      double gy = kernels::dot(g, y, static_cast<std::size_t>(n));
      for (std::int64_t j = 0; j < n; ++j) gx[j] += y[j] * (g[j] - gy);
    }
  }));
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias) {
  const Tensor& tx = x.val();
  require(tx.rank() == 2, "layer_norm: rank-2 input required");
  require(tx.cols() >= 2, "layer_norm: at least 2 columns required");
  require(gain.val().rank() == 1 && gain.val().dim(0) == tx.cols(),
          "layer_norm: gain shape " + gain.val().shape_str());
  require(bias.val().rank() == 1 && bias.val().dim(0) == tx.cols(),
          "layer_norm: bias shape " + bias.val().shape_str());
  const std::int64_t m = tx.rows(), n = tx.cols();
  Tensor out(tx.shape());
  Tensor xhat(tx.shape());
  std::vector<double> inv_std(static_cast<std::size_t>(m));
  const double* gw = gain.val().data();
  const double* bw = bias.val().data();
  for (std::int64_t r = 0; r < m; ++r) {
    const double* xr = tx.row(r);
    double mu = kernels::vsum(xr, static_cast<std::size_t>(n)) / static_cast<double>(n);
    double* h = xhat.row(r);
    for (std::int64_t j = 0; j < n; ++j) h[j] = xr[j] - mu;
    double var = kernels::dot(h, h, static_cast<std::size_t>(n)) / static_cast<double>(n);
    double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[static_cast<std::size_t>(r)] = is;
    double* o = out.row(r);
    for (std::int64_t j = 0; j < n; ++j) {
      h[j] *= is;
      o[j] = h[j] * gw[j] + bw[j];
    }
  }
  return Var(make_node(
      std::move(out), {x.node(), gain.node(), bias.node()},
      [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const NodePtr& px = self.parents[0];
        const NodePtr& pg = self.parents[1];
        const NodePtr& pb = self.parents[2];
        const double* gw = pg->val.data();
        for (std::int64_t r = 0; r < m; ++r) {
          const double* g = self.grad.row(r);
          const double* h = xhat.row(r);
          if (wants_grad(pg)) {
            double* dg = grad_into(pg).data();
            for (std::int64_t j = 0; j < n; ++j) dg[j] += g[j] * h[j];
          }
          if (wants_grad(pb))
            kernels::vadd(grad_into(pb).data(), g, grad_into(pb).data(),
                          static_cast<std::size_t>(n));
          if (wants_grad(px)) {
            double* dx = grad_into(px).row(r);
            double is = inv_std[static_cast<std::size_t>(r)];
            double mh = 0.0, mhx = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
              double hj = g[j] * gw[j];
              mh += hj;
              mhx += hj * h[j];
            }
            mh /= static_cast<double>(n);
            mhx /= static_cast<double>(n);
            for (std::int64_t j = 0; j < n; ++j)
              dx[j] += (g[j] * gw[j] - mh - h[j] * mhx) * is;
          }
        }
      }));
}

Var slice_cols(const Var& a, std::int64_t c0, std::int64_t c1) {
  const Tensor& ta = a.val();
  require(ta.rank() == 2 && 0 <= c0 && c0 < c1 && c1 <= ta.cols(),
          "slice_cols: bad range on " + ta.shape_str());
  const std::int64_t m = ta.rows(), n = ta.cols(), w = c1 - c0;
  Tensor out({m, w});
  for (std::int64_t r = 0; r < m; ++r)
    std::memcpy(out.row(r), ta.row(r) + c0, static_cast<std::size_t>(w) * sizeof(double));
  return Var(make_node(std::move(out), {a.node()}, [m, n, c0, w](Node& self) {
    (void)n;
    const NodePtr& pa = self.parents[0];
    if (!wants_grad(pa)) return;
    Tensor& gb = grad_into(pa);
    for (std::int64_t r = 0; r < m; ++r)
      kernels::vadd(gb.row(r) + c0, self.grad.row(r), gb.row(r) + c0,
                    static_cast<std::size_t>(w));
  }));
}

Var concat_cols(const Var& a, const Var& b) {
  const Tensor& ta = a.val();
  const Tensor& tb = b.val();
  require(ta.rank() == 2 && tb.rank() == 2 && ta.rows() == tb.rows(),
          "concat_cols: shapes " + ta.shape_str() + " vs " + tb.shape_str());
  const std::int64_t m = ta.rows(), n1 = ta.cols(), n2 = tb.cols();
  Tensor out({m, n1 + n2});
  for (std::int64_t r = 0; r < m; ++r) {
    std::memcpy(out.row(r), ta.row(r), static_cast<std::size_t>(n1) * sizeof(double));
    std::memcpy(out.row(r) + n1, tb.row(r), static_cast<std::size_t>(n2) * sizeof(double));
  }
  return Var(make_node(std::move(out), {a.node(), b.node()}, [m, n1, n2](Node& self) {
    const NodePtr& pa = self.parents[0];
    const NodePtr& pb = self.parents[1];
    for (std::int64_t r = 0; r < m; ++r) {
      if (wants_grad(pa))
        kernels::vadd(grad_into(pa).row(r), self.grad.row(r), grad_into(pa).row(r),
                      static_cast<std::size_t>(n1));
      if (wants_grad(pb))
        kernels::vadd(grad_into(pb).row(r), self.grad.row(r) + n1, grad_into(pb).row(r),
                      static_cast<std::size_t>(n2));
    }
  }));
}

Var embedding(const Var& table, std::span<const std::int32_t> ids) {
  const Tensor& tt = table.val();
  require(tt.rank() == 2, "embedding: rank-2 table required");
  const std::int64_t d = tt.cols();
  Tensor out({static_cast<std::int64_t>(ids.size()), d});
  std::vector<std::int32_t> idv(ids.begin(), ids.end());
  for (std::size_t i = 0; i < idv.size(); ++i) {
    require(idv[i] >= 0 && idv[i] < tt.rows(), "embedding: id out of range");
    std::memcpy(out.row(static_cast<std::int64_t>(i)), tt.row(idv[i]),
                static_cast<std::size_t>(d) * sizeof(double));
  }
  return Var(make_node(std::move(out), {table.node()}, [d, idv = std::move(idv)](Node& self) {
    const NodePtr& pt = self.parents[0];
    if (!wants_grad(pt)) return;
    Tensor& gb = grad_into(pt);
    for (std::size_t i = 0; i < idv.size(); ++i)
      kernels::vadd(gb.row(idv[i]), self.grad.row(static_cast<std::int64_t>(i)), gb.row(idv[i]),
                    static_cast<std::size_t>(d));
  }));
}

Var sum_all(const Var& a) {
  const std::size_t n = static_cast<std::size_t>(a.val().numel());
  Tensor out = Tensor::scalar(kernels::vsum(a.val().data(), n));
  return Var(make_node(std::move(out), {a.node()}, [n](Node& self) {
    const NodePtr& pa = self.parents[0];
    if (!wants_grad(pa)) return;
    Tensor& gb = grad_into(pa);
    double g0 = self.grad[0];
    for (std::size_t i = 0; i < n; ++i) gb.data()[i] += g0;
  }));
}

Var max_over_rows(const Var& a) {
  const Tensor& ta = a.val();
  require(ta.rank() == 2, "max_over_rows: rank-2 input required");
  const std::int64_t m = ta.rows(), n = ta.cols();
  Tensor out({n});
  std::vector<std::int64_t> arg(static_cast<std::size_t>(n), 0);
  for (std::int64_t j = 0; j < n; ++j) {
    double best = ta.at(0, j);
    std::int64_t bi = 0;
    for (std::int64_t r = 1; r < m; ++r)
      if (ta.at(r, j) > best) {
        best = ta.at(r, j);
        bi = r;
      }
    out[j] = best;
    arg[static_cast<std::size_t>(j)] = bi;
  }
  return Var(make_node(std::move(out), {a.node()}, [n, arg = std::move(arg)](Node& self) {
    const NodePtr& pa = self.parents[0];
    if (!wants_grad(pa)) return;
    Tensor& gb = grad_into(pa);
    for (std::int64_t j = 0; j < n; ++j)
      gb.at(arg[static_cast<std::size_t>(j)], j) += self.grad[j];
  }));
}

Var cross_entropy_logits(const Var& logits, std::span<const std::int32_t> targets) {
  const Tensor& tl = logits.val();
  require(tl.rank() == 2, "cross_entropy_logits: rank-2 logits required");
  require(static_cast<std::int64_t>(targets.size()) == tl.rows(),
          "cross_entropy_logits: one target per row required");
  const std::int64_t m = tl.rows(), n = tl.cols();
  std::vector<std::int32_t> tv(targets.begin(), targets.end());
  double loss = 0.0;
  for (std::int64_t r = 0; r < m; ++r) {
    const double* x = tl.row(r);
    require(tv[static_cast<std::size_t>(r)] >= 0 && tv[static_cast<std::size_t>(r)] < n,
            "cross_entropy_logits: target out of range");
    double mx = kernels::vmax(x, static_cast<std::size_t>(n));
    double s = 0.0;
    for (std::int64_t j = 0; j < n; ++j) s += std::exp(x[j] - mx);
    loss += mx + std::log(s) - x[tv[static_cast<std::size_t>(r)]];
  }
  loss /= static_cast<double>(m);
  return Var(make_node(Tensor::scalar(loss), {logits.node()},
                       [m, n, tv = std::move(tv)](Node& self) {
                         const NodePtr& pl = self.parents[0];
                         if (!wants_grad(pl)) return;
                         Tensor& gb = grad_into(pl);
                         double coeff = self.grad[0] / static_cast<double>(m);
                         for (std::int64_t r = 0; r < m; ++r) {
                           const double* x = pl->val.row(r);
                           double* g = gb.row(r);
                           double mx = kernels::vmax(x, static_cast<std::size_t>(n));
                           double s = 0.0;
                           for (std::int64_t j = 0; j < n; ++j) s += std::exp(x[j] - mx);
                           for (std::int64_t j = 0; j < n; ++j)
                             g[j] += coeff * std::exp(x[j] - mx) / s;
                           g[tv[static_cast<std::size_t>(r)]] -= coeff;
                         }
                       }));
}

Var sentence_cross_entropy(const Var& probs, std::span<const std::int32_t> gt,
                           std::span<const std::int32_t> pse, std::int32_t pad_id,
                           bool exclude_pad) {
  const Tensor& tp = probs.val();
  require(tp.rank() == 2, "sentence_cross_entropy: rank-2 probabilities required");
  const std::int64_t m = tp.rows(), n = tp.cols();
  require(static_cast<std::int64_t>(gt.size()) == m,
          "sentence_cross_entropy: gt length must equal row count");
  require(pse.empty() || static_cast<std::int64_t>(pse.size()) == m,
          "sentence_cross_entropy: pse length must equal row count");
  std::vector<std::pair<std::int64_t, std::int32_t>> terms;
  std::int64_t live_rows = 0;
  for (std::int64_t t = 0; t < m; ++t) {
    bool live = false;
    std::int32_t g = gt[static_cast<std::size_t>(t)];
    if (g != pad_id) {
      require(g >= 0 && g < n, "sentence_cross_entropy: gt id out of range");
      terms.emplace_back(t, g);
      live = true;
    }
    if (!pse.empty()) {
      std::int32_t p = pse[static_cast<std::size_t>(t)];
      if (p != pad_id) {
        require(p >= 0 && p < n, "sentence_cross_entropy: pse id out of range");
        terms.emplace_back(t, p);
        live = true;
      }
    }
    if (live) ++live_rows;
  }
  const double z = exclude_pad ? static_cast<double>(live_rows) : static_cast<double>(m);
  double loss = 0.0;
  if (z > 0.0) {
    for (const auto& [t, id] : terms) loss -= std::log(std::max(tp.at(t, id), kLogClamp));
    loss /= z;
  }
  return Var(make_node(Tensor::scalar(loss), {probs.node()},
                       [z, terms = std::move(terms)](Node& self) {
                         const NodePtr& pp = self.parents[0];
                         if (!wants_grad(pp) || z <= 0.0) return;
                         Tensor& gb = grad_into(pp);
                         double g0 = self.grad[0];
                         for (const auto& [t, id] : terms) {
                           double p = pp->val.at(t, id);
                           if (p > kLogClamp) gb.at(t, id) -= g0 / (z * p);
                         }
                       }));
}

Var cosine_distance(const Var& a, const Var& b, bool* degenerate) {
  const Tensor& ta = a.val();
  const Tensor& tb = b.val();
  require(ta.numel() == tb.numel(), "cosine_distance: length mismatch " + ta.shape_str() +
                                        " vs " + tb.shape_str());
  const std::size_t n = static_cast<std::size_t>(ta.numel());
  double na = std::sqrt(kernels::dot(ta.data(), ta.data(), n));
  double nb = std::sqrt(kernels::dot(tb.data(), tb.data(), n));
  constexpr double kTiny = 1e-12;
  bool degen = (na < kTiny || nb < kTiny);
  if (degenerate) *degenerate = degen;
  if (degen) {
    return Var(make_node(Tensor::scalar(1.0), {a.node(), b.node()}, [](Node&) {}));
  }
  double cosab = kernels::dot(ta.data(), tb.data(), n) / (na * nb);
  return Var(make_node(Tensor::scalar(1.0 - cosab), {a.node(), b.node()},
                       [n, na, nb, cosab](Node& self) {
                         const NodePtr& pa = self.parents[0];
                         const NodePtr& pb = self.parents[1];
                         double g0 = self.grad[0];
                         const double* av = pa->val.data();
                         const double* bv = pb->val.data();
                         if (wants_grad(pa)) {
                           double* g = grad_into(pa).data();
                           for (std::size_t i = 0; i < n; ++i)
                             g[i] += g0 * (cosab * av[i] / (na * na) - bv[i] / (na * nb));
                         }
                         if (wants_grad(pb)) {
                           double* g = grad_into(pb).data();
                           for (std::size_t i = 0; i < n; ++i)
                             g[i] += g0 * (cosab * bv[i] / (nb * nb) - av[i] / (na * nb));
                         }
                       }));
}

}  // namespace pkgcap
