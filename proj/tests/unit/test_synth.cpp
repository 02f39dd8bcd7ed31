#include <cmath>

#include "det6d/error.hpp"
#include "det6d/synth.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace det6d;

TEST_SUITE("synth") {
  TEST_CASE("terrain") {
    const Terrain flat = Terrain::flat();
    CHECK(flat.height(30, 5) == 0.0);
    CHECK(flat.normal(30, 5) == Vec3::UnitZ());
    CHECK(flat.area() == 1600.0);

    const double g = deg_to_rad(15);
    const Terrain ramp = Terrain::ramp(g);
    CHECK(ramp.height(10, 0) == 0.0);
    CHECK(ramp.height(30, 3) == doctest::Approx(10 * std::tan(g)).epsilon(1e-14));
    CHECK((ramp.normal(30, 0) - Vec3(-std::sin(g), 0, std::cos(g))).norm() < 1e-15);
  }

  TEST_CASE("resting_euler") {
    const double g = deg_to_rad(15);
    const Vec3 n(-std::sin(g), 0, std::cos(g));
    const EulerXYZ e = resting_euler(n, 0.0);
    CHECK(std::abs(std::abs(e.pitch) - g) < 1e-9);
    CHECK(std::abs(e.roll) < 1e-12);
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const Vec3 m = Vec3(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), 1).normalized();
      const double yaw = uniform(rng, -kPi, kPi);
      const EulerXYZ r = resting_euler(m, yaw);
      CHECK(r.yaw == yaw);
      const Vec3 up = oracle::euler_matrix(r.roll, r.pitch, r.yaw) * Vec3::UnitZ();
      CHECK((up - m).norm() < 1e-12);
    }
  }

  TEST_CASE("place_boxes") {
    SceneSpec spec;
    spec.box_count = 8;
    Rng rng(1);
    for (const FullPoseBox& b : place_boxes(Terrain::flat(), spec, rng)) {
      CHECK(b.euler.roll == 0.0);
      CHECK(b.euler.pitch == 0.0);
      CHECK(b.center.z() == doctest::Approx(b.dims.h / 2).epsilon(1e-14));
    }
    const Terrain ramp = Terrain::ramp(deg_to_rad(15));
    for (int trial = 0; trial < 5; ++trial) {
      const auto boxes = place_boxes(ramp, spec, rng);
      CHECK(boxes.size() == 8);
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
          CHECK(oracle::bev_iou(boxes[i], boxes[j]) == 0.0);
        }
        const Vec3 up = oracle::euler_matrix(boxes[i].euler.roll, boxes[i].euler.pitch,
                                             boxes[i].euler.yaw) * Vec3::UnitZ();
        const Vec3 n = ramp.normal(boxes[i].center.x(), boxes[i].center.y());
        CHECK((up - n).norm() < 1e-9);
      }
    }
    SceneSpec crowded;
    crowded.box_count = 500;
    CHECK_THROWS_AS(place_boxes(Terrain::flat(), crowded, rng), Error);
  }

  TEST_CASE("sample_scene") {
    SceneSpec spec;
    spec.density = 5;
    Rng rng(2);
    const auto boxes = place_boxes(Terrain::flat(), spec, rng);
    const LabeledFrame f = sample_scene(Terrain::flat(), boxes, spec, rng);
    std::size_t expected = ground_point_count(Terrain::flat(), spec);
    CHECK(expected == static_cast<std::size_t>(std::ceil(5 * 1600.0)));
    for (const auto& b : boxes) expected += box_point_count(b, spec);
    CHECK(f.cloud.size() == expected);
    CHECK(f.boxes.size() == boxes.size());
    for (std::size_t i = 0; i < f.cloud.size(); ++i) {
      const auto tag = static_cast<std::size_t>(f.cloud.extra(i, kSourceChannel));
      if (tag == 0) {
        CHECK(f.cloud.points[i].z() == 0.0);
      } else {
        FullPoseBox grown = boxes[tag - 1];
        grown.dims = {grown.dims.l + 2e-6, grown.dims.w + 2e-6, grown.dims.h + 2e-6};
        CHECK(oracle::inside(f.cloud.points[i], grown));
      }
    }

    const Terrain ramp = Terrain::ramp(deg_to_rad(15));
    Rng r1(8), r2(8);
    const auto b1 = place_boxes(ramp, spec, r1);
    const auto b2 = place_boxes(ramp, spec, r2);
    const LabeledFrame s1 = sample_scene(ramp, b1, spec, r1), s2 = sample_scene(ramp, b2, spec, r2);
    CHECK(s1.cloud.extras == s2.cloud.extras);
    for (std::size_t i = 0; i < s1.cloud.size(); ++i) {
      CHECK(s1.cloud.points[i] == s2.cloud.points[i]);
      if (s1.cloud.extra(i, kSourceChannel) == 0) {
        const Vec3& p = s1.cloud.points[i];
        CHECK(std::abs(p.z() - ramp.height(p.x(), p.y())) < 1e-12);
      }
    }
  }

  TEST_CASE("fit_plane_normal") {
    const Terrain ramp = Terrain::ramp(deg_to_rad(15));
    Rng rng(4);
    std::vector<Vec3> pts;
    for (int i = 0; i < 50; ++i) {
      const double x = uniform(rng, 25, 35), y = uniform(rng, -5, 5);
      pts.emplace_back(x, y, ramp.height(x, y));
    }
    CHECK((fit_plane_normal(pts) - ramp.normal(30, 0)).norm() < 1e-6);
    CHECK(fit_plane_normal(std::vector<Vec3>{Vec3::Zero()}) == Vec3::UnitZ());
  }

  TEST_CASE("make_features") {
    SceneSpec spec;
    spec.density = 10;
    Rng rng(5);
    const auto boxes = place_boxes(Terrain::flat(), spec, rng);
    const LabeledFrame flat = sample_scene(Terrain::flat(), boxes, spec, rng);
    const FeatureSpec fs;
    const ToySample s = make_features(flat, 0.0, rng, fs);
    CHECK(s.features.cols() == fs.feature_dim());
    CHECK(s.features.rows() == static_cast<Eigen::Index>(s.centers.size()));
    CHECK(s.targets.size() == s.centers.size());
    CHECK(s.centers.size() == boxes.size() + fs.background_per_frame);
    for (std::size_t i = 0; i < s.targets.size(); ++i) CHECK(s.targets.targets[i].ground_label == 0);

    Rng a(6), b(6);
    const ToySample x = make_features(flat, 0.05, a, fs), y = make_features(flat, 0.05, b, fs);
    CHECK(x.features == y.features);

    ToyDatasetSpec ds;
    ds.scenes = 5;
    const auto d1 = make_toy_dataset(ds), d2 = make_toy_dataset(ds);
    REQUIRE(d1.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(d1[i].features == d2[i].features);
    std::size_t sloped = 0;
    for (const auto& t : d1) sloped += t.targets.sloped_count();
    CHECK(sloped > 0);
  }
}
