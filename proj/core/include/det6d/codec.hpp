#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "det6d/geom.hpp"

namespace det6d {

/// How normalized roll/pitch regression targets are formed.
///  kAffine:        (theta - t) / (pi/2), invertible over (-pi/2, pi/2).
///  kSignSymmetric: (theta - sign(theta) t) / (pi/2), only invertible for
///                  |theta| >= t; decoding takes the sign of the raw value.
enum class TiltMode { kAffine, kSignSymmetric };

struct CodecConfig {
  int n_yaw_bins = 12;
  double t_theta_x = deg_to_rad(10.0);
  double t_theta_y = deg_to_rad(10.0);
  /// Terrain label uses the signed test (theta >= t) instead of |theta| >= t.
  bool strict_eq3 = false;
  TiltMode tilt_mode = TiltMode::kAffine;

  double bin_size() const { return 2.0 * kPi / n_yaw_bins; }
  void validate() const;
};

struct YawCode {
  int bin = 0;
  double residual = 0.5;  // in [0.5, 1.5)
};

/// Wraps an angle into [0, 2pi).
double wrap_two_pi(double angle);

YawCode encode_yaw(double theta_z, const CodecConfig& cfg);
double decode_yaw(const YawCode& code, const CodecConfig& cfg);

int ground_label(const FullPoseBox& box, const CodecConfig& cfg);

double encode_tilt(double theta, double threshold, TiltMode mode = TiltMode::kAffine);
double decode_tilt(double normalized, double threshold, TiltMode mode = TiltMode::kAffine);

/// Returns theta_p when s_g > 0.5, otherwise exactly 0.
inline double gate_tilt(double s_g, double theta_p) { return s_g > 0.5 ? theta_p : 0.0; }

Vec3 encode_dims(const Dims& d);
Dims decode_dims(const Vec3& log_dims);

inline Vec3 encode_center_offset(const Vec3& point, const Vec3& box_center) {
  return box_center - point;
}
inline Vec3 decode_center_offset(const Vec3& point, const Vec3& offset) { return point + offset; }

struct BoxTargets {
  int class_label = 0;
  int ground_label = 0;
  YawCode yaw;
  double tilt_x = 0.0;
  double tilt_y = 0.0;
  bool tilt_supervised = false;
  Vec3 log_dims = Vec3::Zero();
  Vec3 center_offset = Vec3::Zero();
};

struct TargetSet {
  std::vector<BoxTargets> targets;
  std::vector<bool> foreground;
  std::vector<int> box_index;  // -1 for background

  std::size_t size() const { return targets.size(); }
  std::size_t foreground_count() const;
  std::size_t sloped_count() const;
};

/// Per-center training targets. A center is foreground when it lies inside
/// a GT box; inside several, it takes the box with the nearest center.
TargetSet make_targets(const PointCloud& centers, std::span<const FullPoseBox> gts,
                       const CodecConfig& cfg);

/// Targets for a center known to belong to `box`.
BoxTargets encode_box(const Vec3& center, const FullPoseBox& box, const CodecConfig& cfg);

}  // namespace det6d
