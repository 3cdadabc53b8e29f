// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient checker, independent of the autodiff
// path: numeric derivative = (f(x+h) - f(x-h)) / 2h on the forward values.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pkgcap/rng.hpp"
#include "pkgcap/tensor.hpp"

namespace pkgcap::testing {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int probes = 0;
};

// fn rebuilds the scalar loss from the current values of `inputs`.
inline GradCheckResult gradcheck(const std::function<Var()>& fn, std::vector<Var> inputs,
                                 Rng& rng, int probes, double step = 1e-5) {
  GradCheckResult res;
  for (int p = 0; p < probes; ++p) {
    std::size_t which = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(inputs.size())));
    Var& v = inputs[which];
    std::int64_t idx = rng.uniform_int(v.val().numel());

    for (auto& in : inputs) in.zero_grad();
    Var loss = fn();
    backward(loss);
    double analytic = v.grad()[idx];

    double saved = v.val()[idx];
    v.mutable_val()[idx] = saved + step;
    double fp = fn().val()[0];
    v.mutable_val()[idx] = saved - step;
    double fm = fn().val()[0];
    v.mutable_val()[idx] = saved;
    double numeric = (fp - fm) / (2.0 * step);

    double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    double rel = std::fabs(analytic - numeric) / denom;
    if (rel > res.max_rel_err) res.max_rel_err = rel;
    ++res.probes;
  }
  return res;
}

inline Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng, double lo = -2.0,
                            double hi = 2.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace pkgcap::testing
