#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "det6d/random.hpp"

namespace det6d {

/// LiDAR frame: x forward, y left, z up. Meters.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = std::numbers::pi;
constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Ordered points plus an optional row-major block of per-point channels
/// (intensity, source tags, features).
struct PointCloud {
  std::vector<Vec3> points;
  std::size_t channels = 0;
  std::vector<double> extras;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  double extra(std::size_t i, std::size_t c) const { return extras[i * channels + c]; }
  double& extra(std::size_t i, std::size_t c) { return extras[i * channels + c]; }

  void validate() const;
};

/// Fixed-axis x-then-y-then-z angles: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerXYZ {
  double roll = 0.0;   // theta_x
  double pitch = 0.0;  // theta_y
  double yaw = 0.0;    // theta_z
};

struct Dims {
  double l = 1.0;
  double w = 1.0;
  double h = 1.0;
};

/// Full-pose box. A box with zero roll and pitch is the conventional
/// yaw-only (2.5D) box.
struct FullPoseBox {
  Vec3 center = Vec3::Zero();
  Dims dims;
  EulerXYZ euler;
  int class_id = 1;
  std::optional<double> score;

  void validate() const;
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 pivot = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * (p - pivot) + pivot; }
};

Mat3 euler_to_matrix(const EulerXYZ& e);

/// Inverse of euler_to_matrix. Throws GimbalLock when |R(2,0)| >= 1 - 1e-9.
/// Roll and yaw come back in (-pi, pi].
EulerXYZ matrix_to_euler(const Mat3& r);

/// Rodrigues rotation by `gamma` about the horizontal unit axis `v` through
/// `pivot` (right-hand rule).
RigidTransform axis_angle_transform(const Vec3& v, double gamma, const Vec3& pivot);

/// Full Euler decomposition of the axis-angle rotation R(v, gamma).
EulerXYZ axis_angle_to_euler(const Vec3& v, double gamma);

struct RollPitch {
  double roll = 0.0;
  double pitch = 0.0;
};

/// The (theta_x, theta_y) part of axis_angle_to_euler.
RollPitch to_euler_xy(const Vec3& v, double gamma);

/// Corner k has local offset (+-l/2, +-w/2, +-h/2) with the sign of each
/// axis taken from bit 0 (x), bit 1 (y), bit 2 (z) of k: set bit means +.
std::array<Vec3, 8> box_corners(const FullPoseBox& b);

/// Closed-boundary membership test in the box frame.
std::vector<bool> points_in_box(const PointCloud& cloud, const FullPoseBox& b);
bool point_in_box(const Vec3& p, const FullPoseBox& b);

/// Counter-clockwise yaw-only footprint in the x-y plane.
std::array<Eigen::Vector2d, 4> bev_footprint(const FullPoseBox& b);

/// Area of the intersection of two convex counter-clockwise polygons.
double convex_intersection_area(std::span<const Eigen::Vector2d> a,
                                std::span<const Eigen::Vector2d> b);

/// Rotated BEV IoU of the yaw-only footprints; roll and pitch are ignored.
double bev_iou(const FullPoseBox& a, const FullPoseBox& b);

/// KITTI-style 3D IoU: footprint intersection times z-extent overlap.
double iou3d(const FullPoseBox& a, const FullPoseBox& b);

/// Monte-Carlo estimate of the true full-pose overlap, sampling uniformly in
/// the axis-aligned bounds of both boxes.
double monte_carlo_iou(const FullPoseBox& a, const FullPoseBox& b,
                       std::size_t samples, Rng& rng);

/// Euclidean center distance; `bev` drops the z component.
double center_distance(const FullPoseBox& a, const FullPoseBox& b, bool bev = false);

/// Greedy descending-score suppression with bev_iou. A box is suppressed
/// when its IoU with a kept box exceeds the threshold. Ties go to the lower
/// input index. Returns kept indices sorted by descending score.
std::vector<std::size_t> nms(std::span<const FullPoseBox> dets, double iou_threshold);

/// Greedy furthest point sampling starting at index 0. Distance is the
/// squared Euclidean distance to the selected set, scaled by `weights[i]`
/// when given. Ties go to the lowest index.
std::vector<std::size_t> fps(const PointCloud& cloud, std::size_t k,
                             std::span<const double> weights = {});

}  // namespace det6d
