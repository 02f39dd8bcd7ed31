#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "det6d/classes.hpp"
#include "det6d/error.hpp"
#include "det6d/io.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace det6d;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("det6d_io_" + name);
}

std::vector<std::uint8_t> float_bytes(const std::vector<float>& v) {
  std::vector<std::uint8_t> out(v.size() * 4);
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

const char* kAxisCalib =
    "P0: 1 0 0 0 0 1 0 0 0 0 1 0\n"
    "P2: 700 0 600 0 0 700 180 0 0 0 1 0\n"
    "R0_rect: 1 0 0 0 1 0 0 0 1\n"
    "Tr_velo_to_cam: 0 -1 0 0 0 0 -1 0 1 0 0 0\n";

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("velodyne") {
    const auto two = float_bytes({1, 2, 3, 0.5f, -4, 5, -6, 0.25f});
    const PointCloud c = io::parse_velodyne(two);
    REQUIRE(c.size() == 2);
    CHECK(c.points[1] == Vec3(-4, 5, -6));
    CHECK(c.channels == 1);
    CHECK(c.extra(0, 0) == 0.5);

    std::vector<std::uint8_t> odd(17, 0);
    try {
      io::parse_velodyne(odd);
      FAIL("expected TruncatedFile");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kTruncatedFile);
    }
    CHECK(io::parse_velodyne({}).empty());

    const fs::path p = temp_file("scan.bin");
    {
      std::ofstream os(p, std::ios::binary);
      os.write(reinterpret_cast<const char*>(two.data()), static_cast<std::streamsize>(two.size()));
    }
    io::write_velodyne(io::read_velodyne(p), p.string() + ".copy");
    std::ifstream a(p, std::ios::binary), b(p.string() + ".copy", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    fs::remove(p);
    fs::remove(p.string() + ".copy");
    CHECK_THROWS_AS(io::read_velodyne(temp_file("missing.bin")), Error);
  }

  TEST_CASE("calibration") {
    std::istringstream is(kAxisCalib);
    const io::KittiCalib c = io::parse_kitti_calib(is);
    CHECK((c.camera_to_lidar(Vec3(0, 0, 10)) - Vec3(10, 0, 0)).norm() < 1e-12);
    CHECK((c.lidar_to_camera(Vec3(10, 0, 0)) - Vec3(0, 0, 10)).norm() < 1e-12);

    // general rigid calibration against an explicit 4x4 inverse
    io::KittiCalib g;
    g.r0_rect = oracle::rot_y(0.01) * oracle::rot_x(-0.02);
    g.tr_velo_to_cam.leftCols<3>() = oracle::rot_z(0.03) * c.tr_velo_to_cam.leftCols<3>();
    g.tr_velo_to_cam.col(3) = Vec3(0.1, -0.2, 0.3);
    Eigen::Matrix4d tr = Eigen::Matrix4d::Identity(), r0 = Eigen::Matrix4d::Identity();
    tr.topRows<3>() = g.tr_velo_to_cam;
    r0.topLeftCorner<3, 3>() = g.r0_rect;
    const Eigen::Matrix4d inv = (r0 * tr).inverse();
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      const Vec3 x(uniform(rng, -20, 20), uniform(rng, -3, 3), uniform(rng, 0, 60));
      const Vec3 ref = (inv * x.homogeneous()).head<3>();
      CHECK((g.camera_to_lidar(x) - ref).norm() < 1e-9);
      CHECK((g.lidar_to_camera(g.camera_to_lidar(x)) - x).norm() < 1e-9);
    }

    std::istringstream missing("P2: 1 0 0 0 0 1 0 0 0 0 1 0\n");
    CHECK_THROWS_AS(io::parse_kitti_calib(missing), Error);
  }

  TEST_CASE("kitti labels") {
    std::istringstream cs(kAxisCalib);
    const io::KittiCalib calib = io::parse_kitti_calib(cs);
    std::istringstream ls(
        "Car 0.00 0 -1.57 100 150 200 200 1.50 1.60 3.90 0.00 0.00 10.00 0.00\n"
        "DontCare -1 -1 -10 0 0 10 10 -1 -1 -1 -1000 -1000 -1000 -10\n"
        "Pedestrian 0.10 1 0.3 10 20 40 50 1.80 0.60 0.80 2.00 1.00 5.00 1.5707963267948966 0.7\n");
    const auto objs = io::parse_kitti_labels(ls, calib);
    REQUIRE(objs.size() == 2);
    const FullPoseBox& car = objs[0].box;
    CHECK(car.class_id == kCar);
    CHECK((car.center - Vec3(10, 0, 0.75)).norm() < 1e-6);
    CHECK(car.dims.l == doctest::Approx(3.9));
    CHECK(car.dims.w == doctest::Approx(1.6));
    CHECK(car.dims.h == doctest::Approx(1.5));
    CHECK(std::abs(std::remainder(car.euler.yaw + kPi / 2, 2 * kPi)) < 1e-6);
    CHECK(car.euler.roll == 0.0);
    CHECK(car.euler.pitch == 0.0);
    CHECK(objs[0].difficulty == Difficulty::kEasy);  // 50 px, unoccluded

    const FullPoseBox& ped = objs[1].box;
    // camera (2, 1, 5) -> lidar (5, -2, -1), lifted by h/2
    CHECK((ped.center - Vec3(5, -2, -1 + 0.9)).norm() < 1e-6);
    CHECK(std::abs(std::remainder(ped.euler.yaw - kPi, 2 * kPi)) < 1e-6);
    CHECK(ped.score.value_or(0) == 0.7);
    CHECK(objs[1].difficulty == Difficulty::kModerate);

    std::ostringstream out;
    std::vector<io::Pose6dRecord> recs;
    for (const auto& o : objs) recs.push_back(io::Pose6dRecord::from_box("000001", o.box, o.difficulty));
    io::write_pose6d(out, recs);
    std::istringstream in(out.str());
    const auto back = io::parse_pose6d(in);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      const FullPoseBox b = back[i].to_box();
      CHECK((b.center - objs[i].box.center).norm() < 1e-6);
      CHECK(std::abs(b.dims.l - objs[i].box.dims.l) < 1e-6);
      CHECK(std::abs(b.euler.yaw - objs[i].box.euler.yaw) < 1e-6);
    }

    std::istringstream bad("Car 0 0 0 0 0 1 1 1 1 1 0 0 1 0\nUfo 0 0 0 0 0 1 1 1 1 1 0 0 1 0\n");
    try {
      io::parse_kitti_labels(bad, calib, "labels.txt");
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kParseError);
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    std::istringstream short_row("Car 0 0 0\n");
    CHECK_THROWS_AS(io::parse_kitti_labels(short_row, calib), Error);
  }

  TEST_CASE("pose6d") {
    std::istringstream empty("");
    CHECK(io::parse_pose6d(empty).empty());

    io::Pose6dRecord r;
    r.frame = "000042";
    r.cls = "Car";
    r.center = Vec3(0.1, -1.0 / 3, 1e-17);
    r.dims = {4.123456789012345, 1.7, std::nextafter(1.6, 2.0)};
    r.euler = {0.01, -0.2, 3.1415926535897};
    r.score = 0.123456789;
    r.difficulty = "hard";
    std::ostringstream os;
    io::write_pose6d(os, std::vector{r});
    std::istringstream is(os.str());
    const auto back = io::parse_pose6d(is);
    REQUIRE(back.size() == 1);
    const auto& b = back[0];
    CHECK(b.frame == r.frame);
    CHECK(b.cls == r.cls);
    CHECK(b.center == r.center);
    CHECK(b.dims.l == r.dims.l);
    CHECK(b.dims.h == r.dims.h);
    CHECK(b.euler.yaw == r.euler.yaw);
    CHECK(b.score == r.score);
    CHECK(b.difficulty == r.difficulty);

    std::istringstream extra(
        R"({"frame":"1","class":"Car","center":[0,0,0],"dims":[1,1,1],"euler":[0,0,0],"note":{"a":1}})"
        "\n");
    const auto withextra = io::parse_pose6d(extra);
    CHECK(withextra[0].unknown.count("note") == 1);
    std::ostringstream dropped;
    io::write_pose6d(dropped, withextra);
    CHECK(dropped.str().find("note") == std::string::npos);

    std::istringstream bad(
        R"({"frame":"1","class":"Car","center":[0,0,0],"dims":[1,1,1],"euler":[0,0,0]})"
        "\n{not json\n");
    try {
      io::parse_pose6d(bad, "x.jsonl");
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kParseError);
      CHECK(std::string(e.what()).find("x.jsonl:2") != std::string::npos);
    }
    std::istringstream neg(
        R"({"frame":"1","class":"Car","center":[0,0,0],"dims":[-1,1,1],"euler":[0,0,0]})");
    CHECK_THROWS_AS(io::parse_pose6d(neg), Error);

    io::Pose6dRecord nan = r;
    nan.center.x() = std::nan("");
    std::ostringstream sink;
    CHECK_THROWS_AS(io::write_pose6d(sink, std::vector{nan}), Error);
  }

  TEST_CASE("ply") {
    PointCloud c;
    c.points = {Vec3(0.1, 0.2, 0.3), Vec3(-1, 2.5, 1.0 / 3), Vec3(7, 8, 9)};
    std::ostringstream os;
    io::write_ply(os, c);
    const oracle::PlyData d = oracle::read_ply(os.str());
    CHECK(d.vertices == 3);
    REQUIRE(d.xyz.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(d.xyz[i][0] == c.points[i].x());
      CHECK(d.xyz[i][1] == c.points[i].y());
      CHECK(d.xyz[i][2] == c.points[i].z());
    }

    const std::vector<io::Rgb> colors{{255, 0, 0}, {0, 255, 0}, {1, 2, 3}};
    std::ostringstream cs;
    io::write_ply(cs, c, colors);
    const oracle::PlyData dc = oracle::read_ply(cs.str());
    REQUIRE(dc.rgb.size() == 3);
    CHECK(dc.rgb[2] == std::array<int, 3>{1, 2, 3});

    std::ostringstream es;
    io::write_ply(es, PointCloud{});
    CHECK(oracle::read_ply(es.str()).vertices == 0);

    std::ostringstream wrong;
    const std::vector<io::Rgb> one{{1, 1, 1}};
    CHECK_THROWS_AS(io::write_ply(wrong, c, one), Error);
  }
}
