#include <cmath>

#include "det6d/codec.hpp"
#include "det6d/error.hpp"
#include "det6d/losses.hpp"
#include "doctest.h"

using namespace det6d;

namespace {

double ref_smooth_l1(double d) {
  return std::abs(d) < 1 ? 0.5 * d * d : std::abs(d) - 0.5;
}

double ref_ce(const nn::Vector& z, int label) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum()) - z[label];
}

double ref_focal(double logit, int y) {
  const double p = 1 / (1 + std::exp(-logit));
  return y ? -0.25 * (1 - p) * (1 - p) * std::log(p) : -0.75 * p * p * std::log(1 - p);
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("sigmoid") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(1000.0) == 1.0);
    CHECK(sigmoid(-1000.0) >= 0.0);
    CHECK(std::isfinite(sigmoid_grad(800.0)));
    CHECK(sigmoid_grad(0.0) == 0.25);
    CHECK(softplus(1000.0) == 1000.0);
  }

  TEST_CASE("smooth_l1") {
    CHECK(smooth_l1(1.0, 1.0).value == 0.0);
    CHECK(smooth_l1(0.5, 0.0).value == 0.125);
    const ScalarLoss l = smooth_l1(2.0, 0.0);
    CHECK(l.value == 1.5);
    CHECK(l.grad == 1.0);
    CHECK(smooth_l1(-2.0, 0.0).grad == -1.0);
  }

  TEST_CASE("focal_loss") {
    CHECK(focal_loss(1.0 - 1e-12, 1).value < 1e-20);
    CHECK(focal_loss(0.9, 1).value == doctest::Approx(0.25 * 0.01 * -std::log(0.9)).epsilon(1e-14));
    CHECK(focal_loss(0.9, 1).value == doctest::Approx(2.6341e-4).epsilon(1e-4));
    const FocalParams bce{0.5, 0.0};
    for (double p : {0.1, 0.4, 0.8}) {
      CHECK(focal_loss(p, 1, bce).value == doctest::Approx(-0.5 * std::log(p)).epsilon(1e-14));
      CHECK(focal_loss(p, 0, bce).value == doctest::Approx(-0.5 * std::log(1 - p)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(focal_loss(1.5, 1), Error);
    CHECK_THROWS_AS(focal_loss(0.5, 2), Error);
    CHECK(focal_loss_logit(0.3, 1).value == doctest::Approx(focal_loss(sigmoid(0.3), 1).value).epsilon(1e-14));
    CHECK(std::isfinite(focal_loss_logit(-800.0, 1).value));
  }

  TEST_CASE("cross_entropy") {
    const std::vector<double> uniform4{0.3, 0.3, 0.3, 0.3};
    CHECK(cross_entropy(uniform4, 2).value == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    const std::vector<double> z{10, 0};
    const VectorLoss l = cross_entropy(z, 0);
    CHECK(l.value == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-12));
    CHECK(l.value == doctest::Approx(4.54e-5).epsilon(1e-3));
    CHECK(std::abs(l.grad.sum()) < 1e-15);
    CHECK_THROWS_AS(cross_entropy(z, 2), Error);
  }

  TEST_CASE("composite_box_loss hand batch") {
    const int classes = 3, bins = 4;
    Rng rng(12);
    HeadOutput out = HeadOutput::zeros(8, classes, bins);
    for (Eigen::Index i = 0; i < 8; ++i) {
      for (int c = 0; c < classes; ++c) out.class_logits(i, c) = uniform(rng, -2, 2);
      for (int b = 0; b < bins; ++b) out.yaw_logits(i, b) = uniform(rng, -2, 2);
      out.seg_logit[i] = uniform(rng, -2, 2);
      out.s_g[i] = sigmoid(out.seg_logit[i]);
      out.yaw_residual[i] = uniform(rng, 0, 2.5);
      for (int k = 0; k < 2; ++k) out.tilt(i, k) = uniform(rng, -1, 1);
      for (int k = 0; k < 3; ++k) {
        out.log_dims(i, k) = uniform(rng, -1, 2);
        out.offset(i, k) = uniform(rng, -2, 2);
      }
    }
    TargetSet t;
    t.targets.resize(8);
    t.foreground = {true, true, true, true, true, false, false, false};
    t.box_index = {0, 1, 2, 3, 4, -1, -1, -1};
    for (int i = 0; i < 5; ++i) {
      BoxTargets& b = t.targets[i];
      b.class_label = 1 + i % 2;
      b.ground_label = i < 2 ? 1 : 0;
      b.tilt_supervised = b.ground_label == 1;
      b.tilt_x = uniform(rng, -0.5, 0.5);
      b.tilt_y = uniform(rng, -0.5, 0.5);
      b.yaw = {i % bins, uniform(rng, 0.5, 1.5)};
      b.log_dims = Vec3(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1));
      b.center_offset = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    }

    double cls = 0, seg = 0, tilt = 0, ycls = 0, yreg = 0, dim = 0, posi = 0;
    for (int i = 0; i < 8; ++i) {
      const BoxTargets& b = t.targets[i];
      const bool fg = t.foreground[i];
      cls += ref_ce(out.class_logits.row(i).transpose(), fg ? b.class_label : 0) / 5;
      if (!fg) continue;
      seg += ref_focal(out.seg_logit[i], b.ground_label) / 5;
      if (b.ground_label) {
        tilt += (ref_smooth_l1(out.tilt(i, 0) - b.tilt_x) + ref_smooth_l1(out.tilt(i, 1) - b.tilt_y)) / 2;
      }
      ycls += ref_ce(out.yaw_logits.row(i).transpose(), b.yaw.bin) / 5;
      yreg += ref_smooth_l1(out.yaw_residual[i] - b.yaw.residual) / 5;
      for (int k = 0; k < 3; ++k) {
        dim += ref_smooth_l1(out.log_dims(i, k) - b.log_dims[k]) / 5;
        posi += ref_smooth_l1(out.offset(i, k) - b.center_offset[k]) / 5;
      }
    }
    const LossTerms got = composite_box_loss(out, t).terms;
    CHECK(std::abs(got.cls - cls) < 1e-10);
    CHECK(std::abs(got.seg - seg) < 1e-10);
    CHECK(std::abs(got.tilt - tilt) < 1e-10);
    CHECK(std::abs(got.yaw_cls - ycls) < 1e-10);
    CHECK(std::abs(got.yaw_reg - yreg) < 1e-10);
    CHECK(std::abs(got.dim - dim) < 1e-10);
    CHECK(std::abs(got.posi - posi) < 1e-10);
    CHECK(std::abs(got.total - (cls + seg + tilt + ycls + yreg + dim + posi)) < 1e-10);

    // no sloped centers: tilt term is exactly zero
    for (auto& b : t.targets) b.ground_label = 0, b.tilt_supervised = false;
    const LossTerms flat = composite_box_loss(out, t).terms;
    CHECK(flat.tilt == 0.0);
    CHECK(std::isfinite(flat.total));
  }

  TEST_CASE("composite_box_loss at the targets") {
    const CodecConfig codec;
    FullPoseBox box;
    box.center = Vec3(1, 0, 0.5);
    box.dims = {4, 2, 1.5};
    box.euler = {0.2, -0.3, 1.0};
    PointCloud centers;
    centers.points = {Vec3(1.2, 0.1, 0.4)};
    const std::vector<FullPoseBox> gts{box};
    const TargetSet t = make_targets(centers, gts, codec);
    HeadOutput out = HeadOutput::zeros(1, 2, codec.n_yaw_bins);
    out.class_logits(0, 1) = 50;
    out.yaw_logits(0, t.targets[0].yaw.bin) = 50;
    out.seg_logit[0] = 50;
    out.yaw_residual[0] = t.targets[0].yaw.residual;
    out.tilt(0, 0) = t.targets[0].tilt_x;
    out.tilt(0, 1) = t.targets[0].tilt_y;
    out.log_dims.row(0) = t.targets[0].log_dims.transpose();
    out.offset.row(0) = t.targets[0].center_offset.transpose();
    const LossTerms l = composite_box_loss(out, t).terms;
    CHECK(l.tilt == 0.0);
    CHECK(l.yaw_reg == 0.0);
    CHECK(l.dim == 0.0);
    CHECK(l.posi == 0.0);
    CHECK(l.total < 1e-20);

    TargetSet wrong = t;
    wrong.targets.push_back({});
    CHECK_THROWS_AS(composite_box_loss(out, wrong), Error);
  }
}
