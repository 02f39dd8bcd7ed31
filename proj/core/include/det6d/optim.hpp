#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "det6d/nn.hpp"

namespace det6d::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
};

void adam_step(Vector& params, const Vector& grads, AdamState& state, const AdamOptions& opt);

/// Scalar function that also reports its analytic gradient when `grad` is
/// non-null.
using DifferentiableFn = std::function<double(const Vector& x, Vector* grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Central differences per coordinate against the analytic gradient.
/// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
/// Coordinates with mask[i] == false are skipped (e.g. across a gate).
GradCheckResult grad_check(const DifferentiableFn& f, const Vector& x, double epsilon = 1e-6,
                           std::span<const bool> mask = {});

}  // namespace det6d::nn
