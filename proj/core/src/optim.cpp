#include "det6d/optim.hpp"

#include <algorithm>
#include <cmath>

#include "det6d/error.hpp"

namespace det6d::nn {

void adam_step(Vector& params, const Vector& grads, AdamState& state, const AdamOptions& opt) {
  if (grads.size() != params.size()) {
    throw Error(ErrorKind::kShapeMismatch, "gradient and parameter sizes differ");
  }
  if (state.m.size() != params.size()) {
    state.m = Vector::Zero(params.size());
    state.v = Vector::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = opt.beta1 * state.m + (1.0 - opt.beta1) * grads;
  state.v = opt.beta2 * state.v + (1.0 - opt.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
  }
}

GradCheckResult grad_check(const DifferentiableFn& f, const Vector& x, double epsilon,
                           std::span<const bool> mask) {
  if (!mask.empty() && mask.size() != static_cast<std::size_t>(x.size())) {
    throw Error(ErrorKind::kShapeMismatch, "grad_check mask size differs from input");
  }
  Vector analytic;
  f(x, &analytic);
  if (analytic.size() != x.size()) {
    throw Error(ErrorKind::kShapeMismatch, "analytic gradient size differs from input");
  }
  GradCheckResult r;
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!mask.empty() && !mask[static_cast<std::size_t>(i)]) continue;
    probe[i] = x[i] + epsilon;
    const double up = f(probe, nullptr);
    probe[i] = x[i] - epsilon;
    const double down = f(probe, nullptr);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    ++r.checked;
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst_index = static_cast<std::size_t>(i);
      r.worst_analytic = analytic[i];
      r.worst_numeric = numeric;
    }
  }
  return r;
}

}  // namespace det6d::nn
