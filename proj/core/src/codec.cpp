#include "det6d/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "det6d/error.hpp"

namespace det6d {

void CodecConfig::validate() const {
  if (n_yaw_bins < 2) throw Error(ErrorKind::kInvalidConfig, "need at least 2 yaw bins");
  for (double t : {t_theta_x, t_theta_y}) {
    if (!(t > 0.0 && t < kPi / 4)) {
      throw Error(ErrorKind::kInvalidConfig, "tilt thresholds must lie in (0, pi/4)");
    }
  }
}

double wrap_two_pi(double angle) {
  constexpr double kTwoPi = 2.0 * kPi;
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

YawCode encode_yaw(double theta_z, const CodecConfig& cfg) {
  const double delta = cfg.bin_size();
  const double theta = wrap_two_pi(theta_z);
  YawCode code;
  code.bin = std::clamp(static_cast<int>(std::floor(theta / delta)), 0, cfg.n_yaw_bins - 1);
  code.residual = (theta - code.bin * delta + delta / 2) / delta;
  return code;
}

double decode_yaw(const YawCode& code, const CodecConfig& cfg) {
  const double delta = cfg.bin_size();
  return wrap_two_pi((code.bin + code.residual) * delta - delta / 2);
}

int ground_label(const FullPoseBox& box, const CodecConfig& cfg) {
  if (cfg.strict_eq3) {
    return box.euler.roll >= cfg.t_theta_x || box.euler.pitch >= cfg.t_theta_y;
  }
  return std::abs(box.euler.roll) >= cfg.t_theta_x || std::abs(box.euler.pitch) >= cfg.t_theta_y;
}

double encode_tilt(double theta, double threshold, TiltMode mode) {
  if (!(std::abs(theta) < kPi / 2)) {
    throw Error(ErrorKind::kTiltOutOfRange, "tilt must satisfy |theta| < pi/2");
  }
  const double offset = (mode == TiltMode::kSignSymmetric && theta < 0.0) ? -threshold : threshold;
  return (theta - offset) / (kPi / 2);
}

double decode_tilt(double normalized, double threshold, TiltMode mode) {
  const double offset =
      (mode == TiltMode::kSignSymmetric && normalized < 0.0) ? -threshold : threshold;
  return normalized * (kPi / 2) + offset;
}

Vec3 encode_dims(const Dims& d) {
  if (!(d.l > 0 && d.w > 0 && d.h > 0)) {
    throw Error(ErrorKind::kNonPositiveDimension, "dimensions must be positive");
  }
  return {std::log(d.l), std::log(d.w), std::log(d.h)};
}

Dims decode_dims(const Vec3& log_dims) {
  return {std::exp(log_dims.x()), std::exp(log_dims.y()), std::exp(log_dims.z())};
}

std::size_t TargetSet::foreground_count() const {
  return static_cast<std::size_t>(std::count(foreground.begin(), foreground.end(), true));
}

std::size_t TargetSet::sloped_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) n += foreground[i] && targets[i].ground_label;
  return n;
}

BoxTargets encode_box(const Vec3& center, const FullPoseBox& box, const CodecConfig& cfg) {
  BoxTargets t;
  t.class_label = box.class_id;
  t.ground_label = ground_label(box, cfg);
  t.yaw = encode_yaw(box.euler.yaw, cfg);
  if (t.ground_label) {
    t.tilt_supervised = true;
    t.tilt_x = encode_tilt(box.euler.roll, cfg.t_theta_x, cfg.tilt_mode);
    t.tilt_y = encode_tilt(box.euler.pitch, cfg.t_theta_y, cfg.tilt_mode);
  }
  t.log_dims = encode_dims(box.dims);
  t.center_offset = encode_center_offset(center, box.center);
  return t;
}

TargetSet make_targets(const PointCloud& centers, std::span<const FullPoseBox> gts,
                       const CodecConfig& cfg) {
  TargetSet set;
  set.targets.resize(centers.size());
  set.foreground.assign(centers.size(), false);
  set.box_index.assign(centers.size(), -1);
  std::vector<double> best_d2(centers.size(), std::numeric_limits<double>::infinity());
  for (std::size_t b = 0; b < gts.size(); ++b) {
    const std::vector<bool> inside = points_in_box(centers, gts[b]);
    for (std::size_t i = 0; i < centers.size(); ++i) {
      if (!inside[i]) continue;
      const double d2 = (centers.points[i] - gts[b].center).squaredNorm();
      if (d2 < best_d2[i]) {
        best_d2[i] = d2;
        set.box_index[i] = static_cast<int>(b);
      }
    }
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (set.box_index[i] < 0) continue;
    set.foreground[i] = true;
    set.targets[i] = encode_box(centers.points[i], gts[set.box_index[i]], cfg);
  }
  return set;
}

}  // namespace det6d
