// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stylerec/error.hpp"

namespace stylerec {

using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit reals.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  std::size_t size() const { return data.size(); }
};

/// Logistic function, stable over the whole double range: the exp() is always
/// taken of a non-positive argument so it cannot overflow.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double dot(const Vec& u, const Vec& v) {
  if (u.size() != v.size())
    throw DimensionError("dot: length mismatch (" + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()) + ")");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

inline double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

/// y = W x
Vec matvec(const Mat& w, const Vec& x);

/// y = W x + b
Vec affine(const Mat& w, const Vec& b, const Vec& x);

/// Per-tensor Adam accumulator. Moment buffers are sized lazily on the first
/// step and must match the parameter shape afterwards.
struct AdamState {
  Vec m;
  Vec v;
  std::uint64_t t = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update, in place. Deterministic: equal inputs give
/// bitwise-equal outputs.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg);

/// Central-difference gradient oracle: (f(x+eps*e_i) - f(x-eps*e_i)) / (2 eps).
/// Throws NumericalError if f evaluates to a non-finite value.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                     double eps);

inline bool all_finite(std::span<const double> v) {
  for (const double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Euclidean norm over several tensors at once (for global gradient clipping).
double global_norm(std::initializer_list<std::span<const double>> tensors);

}  // namespace stylerec
