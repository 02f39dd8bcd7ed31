#include "det6d/slopeaug.hpp"

#include <cmath>

#include "det6d/error.hpp"

namespace det6d {

void SlopeAugConfig::validate() const {
  if (!(p_s >= 0.0 && p_s <= 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "p_s must lie in [0,1]");
  }
  for (const Interval* iv : {&r_range, &alpha_range, &gamma_range}) {
    if (!(iv->lo <= iv->hi)) throw Error(ErrorKind::kInvalidConfig, "empty sampling range");
  }
  if (r_range.lo <= 0.0) throw Error(ErrorKind::kInvalidConfig, "anchor radius must be positive");
  if (gamma_range.lo < 0.0 || gamma_range.hi >= kPi / 2) {
    throw Error(ErrorKind::kInvalidConfig, "slope magnitude must lie in [0, pi/2)");
  }
}

SlopeAugParams params_from_anchor(double r, double alpha, double gamma) {
  SlopeAugParams p;
  p.tau = Vec3(r * std::cos(alpha), r * std::sin(alpha), 0.0);
  p.v = Vec3(-std::sin(alpha), std::cos(alpha), 0.0);
  p.gamma = gamma;
  return p;
}

SlopeAugParams sample_params(const SlopeAugConfig& cfg, Rng& rng) {
  cfg.validate();
  const double r = uniform(rng, cfg.r_range.lo, cfg.r_range.hi);
  const double alpha = uniform(rng, cfg.alpha_range.lo, cfg.alpha_range.hi);
  double gamma = uniform(rng, cfg.gamma_range.lo, cfg.gamma_range.hi);
  const bool negative = [&] {
    switch (cfg.gamma_sign) {
      case GammaSign::kUp: return false;
      case GammaSign::kDown: return true;
      case GammaSign::kBoth: break;
    }
    return (rng() & 1ULL) != 0;
  }();
  if (negative) gamma = -gamma;
  return params_from_anchor(r, alpha, gamma);
}

CloudSplit split_cloud(const PointCloud& cloud, const Vec3& tau) {
  if (tau.squaredNorm() == 0.0) throw Error(ErrorKind::kZeroAnchor, "anchor at the origin");
  CloudSplit split;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    (on_far_side(tau, cloud.points[i]) ? split.far : split.near).push_back(i);
  }
  return split;
}

LabeledFrame apply(const LabeledFrame& frame, const SlopeAugParams& params, bool exact_pose) {
  if (params.gamma == 0.0) return frame;
  const RigidTransform t = axis_angle_transform(params.v, params.gamma, params.tau);
  const CloudSplit split = split_cloud(frame.cloud, params.tau);

  LabeledFrame out = frame;
  for (std::size_t i : split.far) out.cloud.points[i] = t.apply(frame.cloud.points[i]);

  const RollPitch tilt = to_euler_xy(params.v, params.gamma);
  for (FullPoseBox& box : out.boxes) {
    if (!on_far_side(params.tau, box.center)) continue;
    box.center = t.apply(box.center);
    if (exact_pose) {
      const EulerXYZ e = matrix_to_euler(t.rotation * euler_to_matrix(box.euler));
      box.euler = e;
    } else {
      box.euler.roll = tilt.roll;
      box.euler.pitch = tilt.pitch;
    }
  }
  return out;
}

LabeledFrame augment(const LabeledFrame& frame, const SlopeAugConfig& cfg, Rng& rng) {
  const SlopeAugParams params = sample_params(cfg, rng);
  if (!std::bernoulli_distribution(cfg.p_s)(rng)) return frame;
  return apply(frame, params, cfg.exact_pose);
}

}  // namespace det6d
