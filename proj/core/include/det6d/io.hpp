#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "det6d/eval.hpp"
#include "det6d/geom.hpp"

namespace det6d::io {

/// KITTI velodyne scan: little-endian float32 (x, y, z, intensity) records.
/// Intensity becomes extras channel 0.
PointCloud read_velodyne(const std::filesystem::path& path);
PointCloud parse_velodyne(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

/// Writes extras channel 0 as intensity (0 when the cloud has no extras).
void write_velodyne(const PointCloud& cloud, const std::filesystem::path& path);

struct KittiCalib {
  Eigen::Matrix<double, 3, 4> p2 = Eigen::Matrix<double, 3, 4>::Zero();
  Mat3 r0_rect = Mat3::Identity();
  Eigen::Matrix<double, 3, 4> tr_velo_to_cam = Eigen::Matrix<double, 3, 4>::Identity();

  /// Rectified camera coordinates to LiDAR: Tr^-1 (R0^-1 x).
  Vec3 camera_to_lidar(const Vec3& cam) const;
  Vec3 lidar_to_camera(const Vec3& lidar) const;
  /// Rotation part only, for directions.
  Mat3 camera_to_lidar_rotation() const;
};

KittiCalib parse_kitti_calib(std::istream& is, const std::string& source = "<stream>");
KittiCalib read_kitti_calib(const std::filesystem::path& path);

struct KittiObject {
  std::string type;
  FullPoseBox box;  // LiDAR frame, geometric center, zero roll and pitch
  KittiMeta meta;
  Difficulty difficulty = Difficulty::kModerate;
};

/// Parses label_2 rows. DontCare rows are skipped; classes outside the
/// known table raise ParseError with the line number.
std::vector<KittiObject> parse_kitti_labels(std::istream& is, const KittiCalib& calib,
                                            const std::string& source = "<stream>");
std::vector<KittiObject> read_kitti_labels(const std::filesystem::path& path, const KittiCalib& calib);

/// One line of the native full-pose JSONL format.
struct Pose6dRecord {
  std::string frame;
  std::string cls;
  Vec3 center = Vec3::Zero();
  Dims dims;
  EulerXYZ euler;
  std::optional<double> score;
  std::optional<std::string> difficulty;
  /// Keys not in the schema, kept as raw JSON text. Never written back.
  std::map<std::string, std::string> unknown;

  FullPoseBox to_box() const;
  static Pose6dRecord from_box(const std::string& frame, const FullPoseBox& box,
                               std::optional<Difficulty> difficulty = std::nullopt);
};

std::vector<Pose6dRecord> parse_pose6d(std::istream& is, const std::string& source = "<stream>");
std::vector<Pose6dRecord> read_pose6d(const std::filesystem::path& path);
void write_pose6d(std::ostream& os, std::span<const Pose6dRecord> records);
void write_pose6d(const std::filesystem::path& path, std::span<const Pose6dRecord> records);

std::optional<Difficulty> difficulty_from_name(std::string_view name);

using Rgb = std::array<std::uint8_t, 3>;

/// ASCII PLY with x y z and, when given, red green blue per vertex.
void write_ply(std::ostream& os, const PointCloud& cloud, std::span<const Rgb> colors = {});
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               std::span<const Rgb> colors = {});

}  // namespace det6d::io
