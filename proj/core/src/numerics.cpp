// SPDX-License-Identifier: Apache-2.0
#include "stylerec/numerics.hpp"

#include <cmath>
#include <string>

namespace stylerec {

Vec matvec(const Mat& w, const Vec& x) {
  if (w.cols != x.size())
    throw DimensionError("matvec: " + std::to_string(w.rows) + "x" +
                         std::to_string(w.cols) + " times vector of length " +
                         std::to_string(x.size()));
  Vec y(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
  return y;
}

Vec affine(const Mat& w, const Vec& b, const Vec& x) {
  if (w.rows != b.size())
    throw DimensionError("affine: bias length " + std::to_string(b.size()) +
                         " does not match " + std::to_string(w.rows) + " rows");
  Vec y = matvec(w, x);
  for (std::size_t r = 0; r < y.size(); ++r) y[r] += b[r];
  return y;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size())
    throw DimensionError("adam_step: params/grads size mismatch");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("adam_step: state size does not match params");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                     double eps) {
  if (!(eps > 0.0)) throw PreconditionError("finite_diff_grad: eps must be > 0");
  Vec grad(x.size(), 0.0);
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double above = f(probe);
    probe[i] = x[i] - eps;
    const double below = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(above) || !std::isfinite(below))
      throw NumericalError("finite_diff_grad: non-finite f at coordinate " +
                           std::to_string(i));
    grad[i] = (above - below) / (2.0 * eps);
  }
  return grad;
}

double global_norm(std::initializer_list<std::span<const double>> tensors) {
  double sq = 0.0;
  for (const auto& t : tensors)
    for (const double x : t) sq += x * x;
  return std::sqrt(sq);
}

}  // namespace stylerec
