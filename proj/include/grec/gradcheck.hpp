#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "grec/parameters.hpp"

namespace grec::nn {

struct ParameterCheck {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradientCheckReport {
  std::vector<ParameterCheck> params;
  double max_rel_error = 0.0;
  std::string worst_param;
  double tolerance = 0.0;
  bool passed = false;
};

/// Evaluates the loss at the store's current values. When `grads` is
/// non-null the callee also accumulates analytic gradients into it.
using LossFunction = std::function<double(ParameterStore&, GradBuffer* grads)>;

struct GradientCheckOptions {
  double epsilon = 1e-4;
  double tolerance = 1e-3;
  /// 0 checks every scalar; otherwise at most this many (>= 32) random
  /// entries per parameter.
  std::size_t sample_per_param = 0;
  std::uint64_t seed = 7;
  /// Lower bound on the relative-error denominator; keeps near-zero
  /// gradients from being judged on finite-difference rounding noise.
  double scale_floor = 1e-6;
};

/// Compares analytic gradients with central differences
/// (L(w + eps) - L(w - eps)) / 2eps over every trainable parameter.
/// Relative error is |a - n| / max(|a|, |n|, scale_floor).
GradientCheckReport gradient_check(const LossFunction& loss, ParameterStore& params,
                                   const GradientCheckOptions& options = {});

}  // namespace grec::nn
