#include "det6d/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "det6d/classes.hpp"
#include "det6d/error.hpp"

namespace det6d {

namespace {

Dims nominal_dims(int class_id) {
  switch (class_id) {
    case kPedestrian: return {0.8, 0.6, 1.73};
    case kCyclist: return {1.76, 0.6, 1.73};
    default: return {3.9, 1.6, 1.56};
  }
}

int draw_class(const SceneSpec& spec, Rng& rng) {
  double total = 0.0;
  for (const auto& [id, w] : spec.class_mix) total += w;
  double u = uniform(rng, 0.0, total);
  for (const auto& [id, w] : spec.class_mix) {
    if (u < w) return id;
    u -= w;
  }
  return spec.class_mix.back().first;
}

bool footprint_ok(const Terrain& t, const FullPoseBox& box, double margin) {
  const auto fp = bev_footprint(box);
  const double side = t.has_ramp ? t.crease_distance(box.center.x(), box.center.y()) : 0.0;
  for (const auto& c : fp) {
    if (c.x() < t.x_range.lo || c.x() > t.x_range.hi || c.y() < t.y_range.lo ||
        c.y() > t.y_range.hi) {
      return false;
    }
    if (t.has_ramp) {
      const double d = t.crease_distance(c.x(), c.y());
      if (std::abs(d) < margin || (d > 0) != (side > 0)) return false;
    }
  }
  return true;
}

}  // namespace

Terrain Terrain::flat() { return Terrain{}; }

Terrain Terrain::ramp(double grade_rad) {
  Terrain t;
  t.has_ramp = grade_rad != 0.0;
  t.grade = grade_rad;
  return t;
}

double Terrain::crease_distance(double x, double y) const {
  return (Eigen::Vector2d(x, y) - ramp_start).dot(ramp_direction);
}

double Terrain::height(double x, double y) const {
  if (!has_ramp) return 0.0;
  return std::max(0.0, crease_distance(x, y)) * std::tan(grade);
}

Vec3 Terrain::normal(double x, double y) const {
  if (!has_ramp || crease_distance(x, y) <= 0.0) return Vec3::UnitZ();
  const double t = std::tan(grade);
  return Vec3(-t * ramp_direction.x(), -t * ramp_direction.y(), 1.0).normalized();
}

double Terrain::area() const {
  return (x_range.hi - x_range.lo) * (y_range.hi - y_range.lo);
}

void Terrain::validate() const {
  if (!(x_range.lo < x_range.hi && y_range.lo < y_range.hi)) {
    throw Error(ErrorKind::kInvalidConfig, "terrain extent is empty");
  }
  if (has_ramp) {
    if (std::abs(ramp_direction.norm() - 1.0) > 1e-9) {
      throw Error(ErrorKind::kInvalidConfig, "ramp direction must be a unit vector");
    }
    if (!(std::abs(grade) < kPi / 4)) {
      throw Error(ErrorKind::kInvalidConfig, "ramp grade must stay below pi/4");
    }
  }
}

void SceneSpec::validate() const {
  terrain.validate();
  if (!(density > 0.0)) throw Error(ErrorKind::kInvalidConfig, "point density must be positive");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::kInvalidConfig, "noise sigma must be >= 0");
  if (class_mix.empty()) throw Error(ErrorKind::kInvalidConfig, "class mix is empty");
}

EulerXYZ resting_euler(const Vec3& normal, double yaw) {
  // Rz(yaw) Ry(pitch) Rx(roll) e_z = (sin p cos r, -sin r, cos p cos r) before the yaw turn.
  const Vec3 m = Eigen::AngleAxisd(-yaw, Vec3::UnitZ()).toRotationMatrix() * normal.normalized();
  EulerXYZ e;
  e.yaw = yaw;
  e.roll = -std::asin(std::clamp(m.y(), -1.0, 1.0));
  e.pitch = std::atan2(m.x(), m.z());
  return e;
}

std::vector<FullPoseBox> place_boxes(const Terrain& terrain, const SceneSpec& spec, Rng& rng) {
  spec.validate();
  constexpr int kMaxRejections = 1000;
  std::vector<FullPoseBox> boxes;
  for (std::size_t b = 0; b < spec.box_count; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRejections && !placed; ++attempt) {
      FullPoseBox box;
      box.class_id = draw_class(spec, rng);
      const Dims nominal = nominal_dims(box.class_id);
      box.dims = {nominal.l * uniform(rng, 0.9, 1.1), nominal.w * uniform(rng, 0.93, 1.07),
                  nominal.h * uniform(rng, 0.93, 1.07)};
      const double yaw = uniform(rng, 0.0, 2.0 * kPi);
      const double x = uniform(rng, terrain.x_range.lo, terrain.x_range.hi);
      const double y = uniform(rng, terrain.y_range.lo, terrain.y_range.hi);
      const Vec3 n = terrain.normal(x, y);
      box.euler = resting_euler(n, yaw);
      box.center = Vec3(x, y, terrain.height(x, y)) + n * (box.dims.h / 2);
      if (!footprint_ok(terrain, box, spec.crease_margin)) continue;
      const bool overlaps = std::any_of(boxes.begin(), boxes.end(), [&](const FullPoseBox& o) {
        return bev_iou(o, box) > 0.0;
      });
      if (overlaps) continue;
      boxes.push_back(box);
      placed = true;
    }
    if (!placed) {
      throw Error(ErrorKind::kPlacementFailure,
                  "could not place box " + std::to_string(b) + " after 1000 attempts");
    }
  }
  return boxes;
}

std::size_t ground_point_count(const Terrain& terrain, const SceneSpec& spec) {
  return static_cast<std::size_t>(std::ceil(spec.density * terrain.area()));
}

std::size_t box_point_count(const FullPoseBox& box, const SceneSpec& spec) {
  const Dims& d = box.dims;
  const double surface = 2.0 * (d.l * d.w + d.l * d.h + d.w * d.h);
  return static_cast<std::size_t>(std::ceil(spec.density * surface));
}

LabeledFrame sample_scene(const Terrain& terrain, std::span<const FullPoseBox> boxes,
                          const SceneSpec& spec, Rng& rng, std::string frame_id) {
  spec.validate();
  LabeledFrame frame;
  frame.frame_id = std::move(frame_id);
  frame.boxes.assign(boxes.begin(), boxes.end());
  PointCloud& cloud = frame.cloud;
  cloud.channels = 1;
  auto push = [&](const Vec3& p, double tag) {
    const Vec3 noise(gaussian(rng, spec.noise_sigma), gaussian(rng, spec.noise_sigma),
                     gaussian(rng, spec.noise_sigma));
    cloud.points.push_back(p + noise);
    cloud.extras.push_back(tag);
  };

  const std::size_t n_ground = ground_point_count(terrain, spec);
  for (std::size_t i = 0; i < n_ground; ++i) {
    const double x = uniform(rng, terrain.x_range.lo, terrain.x_range.hi);
    const double y = uniform(rng, terrain.y_range.lo, terrain.y_range.hi);
    push(Vec3(x, y, terrain.height(x, y)), 0.0);
  }

  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const FullPoseBox& box = boxes[b];
    const Mat3 r = euler_to_matrix(box.euler);
    const Vec3 half(box.dims.l / 2, box.dims.w / 2, box.dims.h / 2);
    // Face pairs normal to x, y, z weighted by their area.
    const double ax = box.dims.w * box.dims.h;
    const double ay = box.dims.l * box.dims.h;
    const double az = box.dims.l * box.dims.w;
    const std::size_t count = box_point_count(box, spec);
    for (std::size_t k = 0; k < count; ++k) {
      const double u = uniform(rng, 0.0, ax + ay + az);
      const int axis = u < ax ? 0 : (u < ax + ay ? 1 : 2);
      Vec3 local(uniform(rng, -half.x(), half.x()), uniform(rng, -half.y(), half.y()),
                 uniform(rng, -half.z(), half.z()));
      local[axis] = (rng() & 1ULL) ? half[axis] : -half[axis];
      push(r * local + box.center, static_cast<double>(b + 1));
    }
  }
  return frame;
}

Eigen::Index FeatureSpec::feature_dim() const {
  return static_cast<Eigen::Index>(3 + 2 + class_count + 2 + 3 + 3 + noise_channels);
}

Vec3 fit_plane_normal(std::span<const Vec3> points) {
  if (points.size() < 3) return Vec3::UnitZ();
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Vec3 atb = Vec3::Zero();
  for (const auto& p : points) {
    const Vec3 row(p.x() - mean.x(), p.y() - mean.y(), 1.0);
    ata += row * row.transpose();
    atb += row * (p.z() - mean.z());
  }
  const Vec3 coef = ata.ldlt().solve(atb);
  return Vec3(-coef.x(), -coef.y(), 1.0).normalized();
}

ToySample make_features(const LabeledFrame& frame, double sigma_f, Rng& rng,
                        const FeatureSpec& spec) {
  const PointCloud& cloud = frame.cloud;
  if (cloud.channels <= kSourceChannel) {
    throw Error(ErrorKind::kShapeMismatch, "feature synthesis needs source-tagged points");
  }
  std::vector<std::size_t> ground;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.extra(i, kSourceChannel) == 0.0) ground.push_back(i);
  }

  ToySample sample;
  sample.boxes = frame.boxes;
  PointCloud& centers = sample.centers;
  std::vector<int> center_box;
  for (std::size_t b = 0; b < frame.boxes.size(); ++b) {
    const FullPoseBox& box = frame.boxes[b];
    const Vec3 jitter(uniform(rng, -1.0, 1.0) * box.dims.l / 2, uniform(rng, -1.0, 1.0) * box.dims.w / 2,
                      uniform(rng, -1.0, 1.0) * box.dims.h / 2);
    centers.points.push_back(box.center + euler_to_matrix(box.euler) * (spec.center_jitter * jitter));
    center_box.push_back(static_cast<int>(b));
  }
  for (std::size_t k = 0; k < spec.background_per_frame && !ground.empty(); ++k) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const auto pick = static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(ground.size())));
      const Vec3& p = cloud.points[ground[std::min(pick, ground.size() - 1)]];
      const bool inside = std::any_of(frame.boxes.begin(), frame.boxes.end(),
                                      [&](const FullPoseBox& b) { return point_in_box(p, b); });
      if (inside) continue;
      centers.points.push_back(p);
      center_box.push_back(-1);
      break;
    }
  }

  sample.targets = make_targets(centers, frame.boxes, spec.codec);

  const Eigen::Index dim = spec.feature_dim();
  sample.features = nn::Tensor2::Zero(static_cast<Eigen::Index>(centers.size()), dim);
  const double r2 = spec.neighbor_radius * spec.neighbor_radius;
  std::vector<Vec3> neighbors;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const Vec3& p = centers.points[c];
    neighbors.clear();
    for (std::size_t g : ground) {
      const Vec3& q = cloud.points[g];
      if ((q.x() - p.x()) * (q.x() - p.x()) + (q.y() - p.y()) * (q.y() - p.y()) <= r2) {
        neighbors.push_back(q);
      }
    }
    Vec3 n = fit_plane_normal(neighbors);
    double mean_z = p.z(), std_z = 0.0;
    if (!neighbors.empty()) {
      mean_z = 0.0;
      for (const auto& q : neighbors) mean_z += q.z();
      mean_z /= static_cast<double>(neighbors.size());
      for (const auto& q : neighbors) std_z += (q.z() - mean_z) * (q.z() - mean_z);
      std_z = std::sqrt(std_z / static_cast<double>(neighbors.size()));
    }

    auto row = sample.features.row(static_cast<Eigen::Index>(c));
    const int b = center_box[c];
    const bool fg = b >= 0 && sample.targets.foreground[c];
    if (fg) {
      const FullPoseBox& box = frame.boxes[static_cast<std::size_t>(b)];
      n = Eigen::AngleAxisd(-box.euler.yaw, Vec3::UnitZ()).toRotationMatrix() * n;
      const int cls = std::clamp(box.class_id, 0, spec.class_count - 1);
      row(5 + cls) = 1.0;
      Eigen::Index k = 5 + spec.class_count;
      row(k++) = std::cos(box.euler.yaw);
      row(k++) = std::sin(box.euler.yaw);
      const Vec3 ld = encode_dims(box.dims);
      const Vec3 off = encode_center_offset(p, box.center);
      for (int j = 0; j < 3; ++j) row(k++) = ld[j];
      for (int j = 0; j < 3; ++j) row(k++) = off[j];
    } else {
      row(5) = 1.0;
    }
    row(0) = n.x();
    row(1) = n.y();
    row(2) = n.z();
    row(3) = p.z() - mean_z;
    row(4) = std_z;
    const Eigen::Index informative = dim - static_cast<Eigen::Index>(spec.noise_channels);
    for (Eigen::Index k = 0; k < informative; ++k) row(k) += gaussian(rng, sigma_f);
    for (Eigen::Index k = informative; k < dim; ++k) row(k) = gaussian(rng, 1.0);
  }
  return sample;
}

std::vector<ToySample> make_toy_dataset(const ToyDatasetSpec& spec) {
  std::vector<ToySample> out;
  out.reserve(spec.scenes);
  SceneSpec scene;
  scene.terrain = Terrain::ramp(deg_to_rad(spec.ramp_deg));
  scene.terrain.ramp_start.x() = spec.crease_x;
  scene.terrain.validate();
  scene.box_count = spec.boxes_per_scene;
  scene.density = spec.density;
  for (std::size_t s = 0; s < spec.scenes; ++s) {
    const std::string id = std::to_string(s);
    Rng rng(frame_seed(spec.seed, id));
    const auto boxes = place_boxes(scene.terrain, scene, rng);
    const LabeledFrame frame = sample_scene(scene.terrain, boxes, scene, rng, id);
    out.push_back(make_features(frame, spec.feature_noise, rng, spec.features));
  }
  return out;
}

}  // namespace det6d
