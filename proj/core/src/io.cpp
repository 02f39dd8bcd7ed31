#include "det6d/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "det6d/classes.hpp"
#include "det6d/error.hpp"

namespace det6d::io {

static_assert(std::endian::native == std::endian::little,
              "binary readers assume a little-endian host");

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  return f;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw Error(ErrorKind::kIoError, "cannot open " + path.string() + " for writing");
  return f;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::kParseError, source + ":" + std::to_string(line) + ": " + what);
}

Vec3 read_vec3(const json& j, const char* key, const std::string& source, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) parse_fail(source, line, std::string("missing key '") + key + "'");
  if (!it->is_array() || it->size() != 3) {
    parse_fail(source, line, std::string("'") + key + "' must be an array of 3 numbers");
  }
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    const json& e = (*it)[static_cast<std::size_t>(k)];
    if (!e.is_number()) parse_fail(source, line, std::string("'") + key + "' holds a non-number");
    v[k] = e.get<double>();
  }
  if (!v.allFinite()) parse_fail(source, line, std::string("'") + key + "' is not finite");
  return v;
}

}  // namespace

PointCloud parse_velodyne(std::span<const std::uint8_t> bytes, const std::string& source) {
  constexpr std::size_t kRecord = 4 * sizeof(float);
  if (bytes.size() % kRecord != 0) {
    throw Error(ErrorKind::kTruncatedFile,
                source + " holds " + std::to_string(bytes.size()) + " bytes, not a multiple of 16");
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / kRecord;
  cloud.points.reserve(n);
  cloud.channels = 1;
  cloud.extras.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float rec[4];
    std::memcpy(rec, bytes.data() + i * kRecord, kRecord);
    cloud.points.emplace_back(rec[0], rec[1], rec[2]);
    cloud.extras.push_back(rec[3]);
  }
  return cloud;
}

PointCloud read_velodyne(const std::filesystem::path& path) {
  auto f = open_in(path, std::ios::binary);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                        std::istreambuf_iterator<char>());
  return parse_velodyne(bytes, path.string());
}

void write_velodyne(const PointCloud& cloud, const std::filesystem::path& path) {
  cloud.validate();
  std::vector<float> buf;
  buf.reserve(cloud.size() * 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    buf.push_back(static_cast<float>(p.x()));
    buf.push_back(static_cast<float>(p.y()));
    buf.push_back(static_cast<float>(p.z()));
    buf.push_back(cloud.channels > 0 ? static_cast<float>(cloud.extra(i, 0)) : 0.0f);
  }
  auto f = open_out(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!f) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

Vec3 KittiCalib::camera_to_lidar(const Vec3& cam) const {
  const Mat3 r = tr_velo_to_cam.leftCols<3>();
  const Vec3 t = tr_velo_to_cam.col(3);
  return r.transpose() * (r0_rect.inverse() * cam - t);
}

Vec3 KittiCalib::lidar_to_camera(const Vec3& lidar) const {
  const Mat3 r = tr_velo_to_cam.leftCols<3>();
  const Vec3 t = tr_velo_to_cam.col(3);
  return r0_rect * (r * lidar + t);
}

Mat3 KittiCalib::camera_to_lidar_rotation() const {
  const Mat3 r = tr_velo_to_cam.leftCols<3>();
  return r.transpose() * r0_rect.inverse();
}

KittiCalib parse_kitti_calib(std::istream& is, const std::string& source) {
  KittiCalib calib;
  bool have_r0 = false, have_tr = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    std::istringstream ss(line.substr(colon + 1));
    std::vector<double> v;
    for (double x; ss >> x;) v.push_back(x);
    if (!ss.eof()) parse_fail(source, lineno, "non-numeric value in '" + key + "'");
    auto expect = [&](std::size_t n) {
      if (v.size() != n) {
        parse_fail(source, lineno, "'" + key + "' needs " + std::to_string(n) + " values, got " +
                                       std::to_string(v.size()));
      }
    };
    if (key == "P2") {
      expect(12);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) calib.p2(r, c) = v[static_cast<std::size_t>(r * 4 + c)];
    } else if (key == "R0_rect") {
      expect(9);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) calib.r0_rect(r, c) = v[static_cast<std::size_t>(r * 3 + c)];
      have_r0 = true;
    } else if (key == "Tr_velo_to_cam") {
      expect(12);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) calib.tr_velo_to_cam(r, c) = v[static_cast<std::size_t>(r * 4 + c)];
      have_tr = true;
    }
  }
  if (!have_r0 || !have_tr) {
    throw Error(ErrorKind::kParseError, source + ": calibration lacks R0_rect or Tr_velo_to_cam");
  }
  return calib;
}

KittiCalib read_kitti_calib(const std::filesystem::path& path) {
  auto f = open_in(path);
  return parse_kitti_calib(f, path.string());
}

std::vector<KittiObject> parse_kitti_labels(std::istream& is, const KittiCalib& calib,
                                            const std::string& source) {
  std::vector<KittiObject> out;
  std::string line;
  std::size_t lineno = 0;
  const Mat3 dir_rot = calib.camera_to_lidar_rotation();
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string type;
    if (!(ss >> type)) continue;
    if (type == "DontCare") continue;
    std::vector<double> v;
    for (double x; ss >> x;) v.push_back(x);
    if (!ss.eof()) parse_fail(source, lineno, "non-numeric field");
    if (v.size() != 14 && v.size() != 15) {
      parse_fail(source, lineno, "expected 15 or 16 fields, got " + std::to_string(v.size() + 1));
    }
    const auto cls = class_from_name(type);
    if (!cls) parse_fail(source, lineno, "unknown class '" + type + "'");

    KittiObject obj;
    obj.type = type;
    obj.meta.truncation = v[0];
    obj.meta.occlusion = static_cast<int>(v[1]);
    obj.meta.bbox_height = v[6] - v[4];
    obj.difficulty = assign_difficulty(obj.meta);

    const double h = v[7], w = v[8], l = v[9];
    if (!(h > 0 && w > 0 && l > 0)) parse_fail(source, lineno, "non-positive dimensions");
    const Vec3 bottom_cam(v[10], v[11], v[12]);
    const double ry = v[13];

    FullPoseBox& b = obj.box;
    b.class_id = *cls;
    b.dims = {l, w, h};
    b.center = calib.camera_to_lidar(bottom_cam) + Vec3(0.0, 0.0, h / 2);
    const Vec3 heading = dir_rot * Vec3(std::cos(ry), 0.0, -std::sin(ry));
    b.euler.yaw = std::atan2(heading.y(), heading.x());
    if (v.size() == 15) b.score = v[14];
    out.push_back(obj);
  }
  return out;
}

std::vector<KittiObject> read_kitti_labels(const std::filesystem::path& path, const KittiCalib& calib) {
  auto f = open_in(path);
  return parse_kitti_labels(f, calib, path.string());
}

std::optional<Difficulty> difficulty_from_name(std::string_view name) {
  for (Difficulty d : {Difficulty::kEasy, Difficulty::kModerate, Difficulty::kHard, Difficulty::kIgnored}) {
    if (difficulty_name(d) == name) return d;
  }
  return std::nullopt;
}

FullPoseBox Pose6dRecord::to_box() const {
  const auto id = class_from_name(cls);
  if (!id) throw Error(ErrorKind::kParseError, "unknown class '" + cls + "'");
  FullPoseBox b;
  b.center = center;
  b.dims = dims;
  b.euler = euler;
  b.class_id = *id;
  b.score = score;
  b.validate();
  return b;
}

Pose6dRecord Pose6dRecord::from_box(const std::string& frame, const FullPoseBox& box,
                                    std::optional<Difficulty> difficulty) {
  Pose6dRecord r;
  r.frame = frame;
  r.cls = class_name(box.class_id);
  r.center = box.center;
  r.dims = box.dims;
  r.euler = box.euler;
  r.score = box.score;
  if (difficulty) r.difficulty = difficulty_name(*difficulty);
  return r;
}

std::vector<Pose6dRecord> parse_pose6d(std::istream& is, const std::string& source) {
  static const std::array<std::string_view, 7> kKnown{"frame", "class", "center", "dims",
                                                      "euler", "score", "difficulty"};
  std::vector<Pose6dRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(source, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) parse_fail(source, lineno, "each line must be a JSON object");
    Pose6dRecord r;
    for (const char* key : {"frame", "class"}) {
      const auto it = j.find(key);
      if (it == j.end() || !it->is_string()) {
        parse_fail(source, lineno, std::string("missing string key '") + key + "'");
      }
    }
    r.frame = j["frame"].get<std::string>();
    r.cls = j["class"].get<std::string>();
    r.center = read_vec3(j, "center", source, lineno);
    const Vec3 d = read_vec3(j, "dims", source, lineno);
    if (!(d.x() > 0 && d.y() > 0 && d.z() > 0)) parse_fail(source, lineno, "dims must be positive");
    r.dims = {d.x(), d.y(), d.z()};
    const Vec3 e = read_vec3(j, "euler", source, lineno);
    r.euler = {e.x(), e.y(), e.z()};
    if (const auto it = j.find("score"); it != j.end() && !it->is_null()) {
      if (!it->is_number()) parse_fail(source, lineno, "'score' must be a number");
      r.score = it->get<double>();
    }
    if (const auto it = j.find("difficulty"); it != j.end() && !it->is_null()) {
      if (!it->is_string() || !difficulty_from_name(it->get<std::string>())) {
        parse_fail(source, lineno, "'difficulty' must be easy, moderate, hard or ignored");
      }
      r.difficulty = it->get<std::string>();
    }
    for (const auto& [key, value] : j.items()) {
      if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) r.unknown[key] = value.dump();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Pose6dRecord> read_pose6d(const std::filesystem::path& path) {
  auto f = open_in(path);
  return parse_pose6d(f, path.string());
}

void write_pose6d(std::ostream& os, std::span<const Pose6dRecord> records) {
  for (const auto& r : records) {
    const bool finite = r.center.allFinite() && std::isfinite(r.dims.l) && std::isfinite(r.dims.w) &&
                        std::isfinite(r.dims.h) && std::isfinite(r.euler.roll) &&
                        std::isfinite(r.euler.pitch) && std::isfinite(r.euler.yaw) &&
                        (!r.score || std::isfinite(*r.score));
    if (!finite) throw Error(ErrorKind::kInputOutOfRange, "record for frame '" + r.frame + "' is not finite");
    ordered_json j;
    j["frame"] = r.frame;
    j["class"] = r.cls;
    j["center"] = {r.center.x(), r.center.y(), r.center.z()};
    j["dims"] = {r.dims.l, r.dims.w, r.dims.h};
    j["euler"] = {r.euler.roll, r.euler.pitch, r.euler.yaw};
    if (r.score) j["score"] = *r.score;
    if (r.difficulty) j["difficulty"] = *r.difficulty;
    os << j.dump() << '\n';
  }
}

void write_pose6d(const std::filesystem::path& path, std::span<const Pose6dRecord> records) {
  auto f = open_out(path);
  write_pose6d(f, records);
  if (!f) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

void write_ply(std::ostream& os, const PointCloud& cloud, std::span<const Rgb> colors) {
  if (!colors.empty() && colors.size() != cloud.size()) {
    throw Error(ErrorKind::kShapeMismatch, "one color per point required");
  }
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << '\n'
     << "property double x\nproperty double y\nproperty double z\n";
  if (!colors.empty()) os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  os << "end_header\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    os << p.x() << ' ' << p.y() << ' ' << p.z();
    if (!colors.empty()) {
      os << ' ' << int{colors[i][0]} << ' ' << int{colors[i][1]} << ' ' << int{colors[i][2]};
    }
    os << '\n';
  }
  os.precision(old);
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, std::span<const Rgb> colors) {
  auto f = open_out(path);
  write_ply(f, cloud, colors);
  if (!f) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

}  // namespace det6d::io
