#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "det6d/geom.hpp"
#include "det6d/random.hpp"

namespace det6d {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

enum class GammaSign { kBoth, kUp, kDown };

/// Sampling ranges for synthetic slopes. Angles in radians.
struct SlopeAugConfig {
  double p_s = 0.1;
  Interval r_range{8.0, 32.0};
  Interval alpha_range{-kPi / 4, kPi / 4};
  Interval gamma_range{deg_to_rad(5.0), deg_to_rad(25.0)};  // magnitude
  GammaSign gamma_sign = GammaSign::kBoth;
  std::uint64_t seed = 0;
  /// Annotate far-side boxes with the exact Euler decomposition of
  /// R(v, gamma) * Rz(yaw) instead of (tilt of R(v, gamma), original yaw).
  bool exact_pose = false;

  void validate() const;
};

/// Anchor tau = (r cos a, r sin a, 0) and its tangent axis v = (-sin a, cos a, 0).
struct SlopeAugParams {
  Vec3 tau = Vec3::Zero();
  Vec3 v = Vec3::UnitY();
  double gamma = 0.0;
};

struct LabeledFrame {
  PointCloud cloud;
  std::vector<FullPoseBox> boxes;
  std::string frame_id;
};

SlopeAugParams params_from_anchor(double r, double alpha, double gamma);

SlopeAugParams sample_params(const SlopeAugConfig& cfg, Rng& rng);

/// True for points on the far side of the split plane: tau^T (tau - p) < 0.
inline bool on_far_side(const Vec3& tau, const Vec3& p) { return tau.dot(tau - p) < 0.0; }

struct CloudSplit {
  std::vector<std::size_t> near;  // contains the origin side
  std::vector<std::size_t> far;
};

CloudSplit split_cloud(const PointCloud& cloud, const Vec3& tau);

/// Rotates the far side and its boxes about (v, gamma) at tau. Near-side
/// points and boxes are copied untouched.
LabeledFrame apply(const LabeledFrame& frame, const SlopeAugParams& params,
                   bool exact_pose = false);

/// Draws parameters from `rng`, then keeps them with probability p_s.
LabeledFrame augment(const LabeledFrame& frame, const SlopeAugConfig& cfg, Rng& rng);

}  // namespace det6d
