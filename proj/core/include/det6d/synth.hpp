#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "det6d/codec.hpp"
#include "det6d/geom.hpp"
#include "det6d/head.hpp"
#include "det6d/slopeaug.hpp"

namespace det6d {

/// Flat ground plus an optional planar ramp. The ramp begins at the crease
/// line through `ramp_start` (perpendicular to `ramp_direction`) and rises
/// along `ramp_direction` at `grade` radians.
struct Terrain {
  Interval x_range{0.0, 40.0};
  Interval y_range{-20.0, 20.0};
  bool has_ramp = false;
  Eigen::Vector2d ramp_start{20.0, 0.0};
  Eigen::Vector2d ramp_direction{1.0, 0.0};
  double grade = 0.0;

  static Terrain flat();
  static Terrain ramp(double grade_rad);

  /// Signed distance from the crease in the x-y plane; positive on the ramp.
  double crease_distance(double x, double y) const;
  double height(double x, double y) const;
  Vec3 normal(double x, double y) const;
  double area() const;  // planimetric
  void validate() const;
};

/// Ground points carry source tag 0; points sampled on box b carry b + 1.
constexpr std::size_t kSourceChannel = 0;

struct SceneSpec {
  Terrain terrain;
  std::size_t box_count = 6;
  std::vector<std::pair<int, double>> class_mix{{1, 1.0}};  // (class id, weight)
  double density = 20.0;                                    // points per m^2
  double noise_sigma = 0.0;                                 // meters
  std::uint64_t seed = 0;
  /// Minimum gap between a box footprint and the ramp crease.
  double crease_margin = 1.0;

  void validate() const;
};

/// Roll and pitch that make the box's local +z equal `normal` at heading `yaw`.
EulerXYZ resting_euler(const Vec3& normal, double yaw);

/// Non-overlapping boxes resting on the terrain surface.
std::vector<FullPoseBox> place_boxes(const Terrain& terrain, const SceneSpec& spec, Rng& rng);

/// ceil(density * planimetric area) ground samples plus, per box,
/// ceil(density * surface area) samples on its faces.
LabeledFrame sample_scene(const Terrain& terrain, std::span<const FullPoseBox> boxes,
                          const SceneSpec& spec, Rng& rng, std::string frame_id = "000000");

std::size_t ground_point_count(const Terrain& terrain, const SceneSpec& spec);
std::size_t box_point_count(const FullPoseBox& box, const SceneSpec& spec);

struct FeatureSpec {
  std::size_t background_per_frame = 4;
  double neighbor_radius = 1.0;
  int class_count = 2;
  std::size_t noise_channels = 2;
  double center_jitter = 0.2;  // fraction of the half extents
  CodecConfig codec;

  Eigen::Index feature_dim() const;
};

/// Least-squares plane z = a x + b y + c through `points`; returns the unit
/// upward normal, or +z with fewer than 3 points.
Vec3 fit_plane_normal(std::span<const Vec3> points);

/// Synthetic coarse-center features standing in for a trained backbone.
/// Per center: plane-fit normal (in the object's heading frame for
/// foreground), height stats, class cue, heading cue, log-dim cue, offset
/// cue, then pure noise channels. sigma_f perturbs the informative channels.
ToySample make_features(const LabeledFrame& frame, double sigma_f, Rng& rng,
                        const FeatureSpec& spec = {});

struct ToyDatasetSpec {
  std::size_t scenes = 60;
  double ramp_deg = 15.0;
  double crease_x = 16.0;  // ramp covers x > crease_x
  std::size_t boxes_per_scene = 6;
  double density = 10.0;
  double feature_noise = 0.01;
  std::uint64_t seed = 0;
  FeatureSpec features;
};

/// Ramp scenes turned into feature samples, one per scene.
std::vector<ToySample> make_toy_dataset(const ToyDatasetSpec& spec);

}  // namespace det6d
