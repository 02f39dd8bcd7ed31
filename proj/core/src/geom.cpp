#include "det6d/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "det6d/error.hpp"

namespace det6d {

namespace {

constexpr double kUnitTol = 1e-9;
constexpr double kGimbalTol = 1e-9;

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double polygon_area(std::span<const Eigen::Vector2d> poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    twice += cross2(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * std::abs(twice);
}

double z_overlap(const FullPoseBox& a, const FullPoseBox& b) {
  const double lo = std::max(a.center.z() - a.dims.h / 2, b.center.z() - b.dims.h / 2);
  const double hi = std::min(a.center.z() + a.dims.h / 2, b.center.z() + b.dims.h / 2);
  return std::max(0.0, hi - lo);
}

double volume(const Dims& d) { return d.l * d.w * d.h; }

}  // namespace

void PointCloud::validate() const {
  if (extras.size() != points.size() * channels) {
    throw Error(ErrorKind::kShapeMismatch,
                "extras hold " + std::to_string(extras.size()) + " values for " +
                    std::to_string(points.size()) + " points x " +
                    std::to_string(channels) + " channels");
  }
}

void FullPoseBox::validate() const {
  if (!(dims.l > 0 && dims.w > 0 && dims.h > 0)) {
    throw Error(ErrorKind::kInvalidBox, "box dimensions must be positive");
  }
  if (!center.allFinite() || !std::isfinite(euler.roll) || !std::isfinite(euler.pitch) ||
      !std::isfinite(euler.yaw)) {
    throw Error(ErrorKind::kInvalidBox, "box has non-finite pose");
  }
  if (score && !(*score >= 0.0 && *score <= 1.0)) {
    throw Error(ErrorKind::kInvalidBox, "score outside [0,1]");
  }
}

Mat3 euler_to_matrix(const EulerXYZ& e) {
  const Mat3 rx = Eigen::AngleAxisd(e.roll, Vec3::UnitX()).toRotationMatrix();
  const Mat3 ry = Eigen::AngleAxisd(e.pitch, Vec3::UnitY()).toRotationMatrix();
  const Mat3 rz = Eigen::AngleAxisd(e.yaw, Vec3::UnitZ()).toRotationMatrix();
  return rz * ry * rx;
}

EulerXYZ matrix_to_euler(const Mat3& r) {
  // r(2,0) = -sin(pitch); the remaining entries of the last row and first
  // column carry roll and yaw scaled by cos(pitch).
  if (std::abs(r(2, 0)) >= 1.0 - kGimbalTol) {
    throw Error(ErrorKind::kGimbalLock, "pitch at +-pi/2, roll and yaw are not separable");
  }
  EulerXYZ e;
  e.pitch = std::asin(-r(2, 0));
  e.roll = std::atan2(r(2, 1), r(2, 2));
  e.yaw = std::atan2(r(1, 0), r(0, 0));
  return e;
}

RigidTransform axis_angle_transform(const Vec3& v, double gamma, const Vec3& pivot) {
  if (std::abs(v.norm() - 1.0) > kUnitTol) {
    throw Error(ErrorKind::kNonUnitAxis, "rotation axis must have unit length");
  }
  if (std::abs(v.z()) > kUnitTol) {
    throw Error(ErrorKind::kNonHorizontalAxis, "rotation axis must lie in the x-y plane");
  }
  Mat3 k;
  k << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  RigidTransform t;
  t.rotation = Mat3::Identity() + std::sin(gamma) * k + (1.0 - std::cos(gamma)) * k * k;
  t.pivot = pivot;
  return t;
}

EulerXYZ axis_angle_to_euler(const Vec3& v, double gamma) {
  return matrix_to_euler(axis_angle_transform(v, gamma, Vec3::Zero()).rotation);
}

RollPitch to_euler_xy(const Vec3& v, double gamma) {
  const EulerXYZ e = axis_angle_to_euler(v, gamma);
  return {e.roll, e.pitch};
}

std::array<Vec3, 8> box_corners(const FullPoseBox& b) {
  const Mat3 r = euler_to_matrix(b.euler);
  std::array<Vec3, 8> corners;
  for (int k = 0; k < 8; ++k) {
    const Vec3 local((k & 1 ? 0.5 : -0.5) * b.dims.l,
                     (k & 2 ? 0.5 : -0.5) * b.dims.w,
                     (k & 4 ? 0.5 : -0.5) * b.dims.h);
    corners[k] = r * local + b.center;
  }
  return corners;
}

bool point_in_box(const Vec3& p, const FullPoseBox& b) {
  const Vec3 local = euler_to_matrix(b.euler).transpose() * (p - b.center);
  return std::abs(local.x()) <= b.dims.l / 2 && std::abs(local.y()) <= b.dims.w / 2 &&
         std::abs(local.z()) <= b.dims.h / 2;
}

std::vector<bool> points_in_box(const PointCloud& cloud, const FullPoseBox& b) {
  const Mat3 rt = euler_to_matrix(b.euler).transpose();
  const double hl = b.dims.l / 2, hw = b.dims.w / 2, hh = b.dims.h / 2;
  std::vector<bool> mask(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 local = rt * (cloud.points[i] - b.center);
    mask[i] = std::abs(local.x()) <= hl && std::abs(local.y()) <= hw && std::abs(local.z()) <= hh;
  }
  return mask;
}

std::array<Eigen::Vector2d, 4> bev_footprint(const FullPoseBox& b) {
  const double c = std::cos(b.euler.yaw), s = std::sin(b.euler.yaw);
  const double hl = b.dims.l / 2, hw = b.dims.w / 2;
  const std::array<Eigen::Vector2d, 4> local = {Eigen::Vector2d(-hl, -hw), Eigen::Vector2d(hl, -hw),
                                                Eigen::Vector2d(hl, hw), Eigen::Vector2d(-hl, hw)};
  std::array<Eigen::Vector2d, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = Eigen::Vector2d(c * local[i].x() - s * local[i].y() + b.center.x(),
                             s * local[i].x() + c * local[i].y() + b.center.y());
  }
  return out;
}

double convex_intersection_area(std::span<const Eigen::Vector2d> a,
                                std::span<const Eigen::Vector2d> b) {
  // Sutherland-Hodgman: clip `a` by every edge of `b`.
  std::vector<Eigen::Vector2d> poly(a.begin(), a.end());
  std::vector<Eigen::Vector2d> next;
  for (std::size_t e = 0; e < b.size() && !poly.empty(); ++e) {
    const Eigen::Vector2d& c0 = b[e];
    const Eigen::Vector2d edge = b[(e + 1) % b.size()] - c0;
    next.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Eigen::Vector2d& p = poly[i];
      const Eigen::Vector2d& q = poly[(i + 1) % poly.size()];
      const double sp = cross2(edge, p - c0);
      const double sq = cross2(edge, q - c0);
      if (sp >= 0) next.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        const double t = sp / (sp - sq);
        next.push_back(p + t * (q - p));
      }
    }
    poly.swap(next);
  }
  return poly.size() < 3 ? 0.0 : polygon_area(poly);
}

double bev_iou(const FullPoseBox& a, const FullPoseBox& b) {
  const auto pa = bev_footprint(a);
  const auto pb = bev_footprint(b);
  const double inter = convex_intersection_area(pa, pb);
  const double uni = a.dims.l * a.dims.w + b.dims.l * b.dims.w - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou3d(const FullPoseBox& a, const FullPoseBox& b) {
  const double dz = z_overlap(a, b);
  if (dz <= 0) return 0.0;
  const auto pa = bev_footprint(a);
  const auto pb = bev_footprint(b);
  const double inter = convex_intersection_area(pa, pb) * dz;
  const double uni = volume(a.dims) + volume(b.dims) - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double monte_carlo_iou(const FullPoseBox& a, const FullPoseBox& b, std::size_t samples,
                       Rng& rng) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto* box : {&a, &b}) {
    for (const Vec3& c : box_corners(*box)) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  }
  std::size_t in_a = 0, in_b = 0, in_both = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec3 p(uniform(rng, lo.x(), hi.x()), uniform(rng, lo.y(), hi.y()),
                 uniform(rng, lo.z(), hi.z()));
    const bool ia = point_in_box(p, a);
    const bool ib = point_in_box(p, b);
    in_a += ia;
    in_b += ib;
    in_both += ia && ib;
  }
  const std::size_t uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

double center_distance(const FullPoseBox& a, const FullPoseBox& b, bool bev) {
  Vec3 d = a.center - b.center;
  if (bev) d.z() = 0.0;
  return d.norm();
}

std::vector<std::size_t> nms(std::span<const FullPoseBox> dets, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  for (const auto& d : dets) {
    if (!d.score) throw Error(ErrorKind::kMissingScore, "nms requires scored detections");
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return *dets[i].score > *dets[j].score;
  });
  std::vector<bool> suppressed(dets.size(), false);
  std::vector<std::size_t> keep;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (suppressed[i]) continue;
    keep.push_back(i);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!suppressed[j] && bev_iou(dets[i], dets[j]) > iou_threshold) suppressed[j] = true;
    }
  }
  return keep;
}

std::vector<std::size_t> fps(const PointCloud& cloud, std::size_t k,
                             std::span<const double> weights) {
  const std::size_t n = cloud.size();
  if (k < 1 || k > n) {
    throw Error(ErrorKind::kKTooLarge,
                "requested " + std::to_string(k) + " samples from " + std::to_string(n) + " points");
  }
  if (!weights.empty() && weights.size() != n) {
    throw Error(ErrorKind::kShapeMismatch, "fps weights must match the cloud size");
  }
  std::vector<std::size_t> selected;
  selected.reserve(k);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  std::size_t last = 0;
  selected.push_back(last);
  taken[last] = true;
  while (selected.size() < k) {
    const Vec3& p = cloud.points[last];
    std::size_t best = n;
    double best_score = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d2[i] = std::min(min_d2[i], (cloud.points[i] - p).squaredNorm());
      if (taken[i]) continue;
      const double score = weights.empty() ? min_d2[i] : weights[i] * min_d2[i];
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    last = best;
    taken[last] = true;
    selected.push_back(last);
  }
  return selected;
}

}  // namespace det6d
