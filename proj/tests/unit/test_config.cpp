#include <cmath>

#include "det6d/config.hpp"
#include "det6d/error.hpp"
#include "doctest.h"

using namespace det6d;

namespace {

ErrorKind kind_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIoError;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const LoadedConfig c = parse_config("{}");
    CHECK(c.warnings.empty());
    CHECK(c.config.codec.n_yaw_bins == 12);
    CHECK(c.config.codec.t_theta_x == doctest::Approx(deg_to_rad(10)).epsilon(1e-15));
    CHECK(c.config.codec.t_theta_y == doctest::Approx(deg_to_rad(10)).epsilon(1e-15));
    CHECK(c.config.slope_aug.p_s == 0.1);
    CHECK(c.config.nms_iou == 0.1);
    CHECK(c.config.num_points == 16384);
    CHECK(c.config.sampling == std::vector<std::size_t>{4096, 1024, 512});
    CHECK(c.config.eval.recall_positions == 40);
  }

  TEST_CASE("overrides") {
    const LoadedConfig c = parse_config(R"({
      "slope_aug": {"p_s": 0.5, "gamma_max_deg": 20, "gamma_sign": "up"},
      "codec": {"n_yaw_bins": 24, "tilt_mode": "sign_symmetric"},
      "eval": {"criteria": ["cd"], "recall_positions": 11},
      "train": {"epochs": 7, "loss": {"weights": {"tilt": 2.5}}},
      "head": {"shared_widths": [8, 4]}
    })");
    const ToolkitConfig& t = c.config;
    CHECK(t.slope_aug.p_s == 0.5);
    CHECK(t.slope_aug.gamma_range.hi == doctest::Approx(deg_to_rad(20)).epsilon(1e-15));
    CHECK(t.slope_aug.gamma_sign == GammaSign::kUp);
    CHECK(t.codec.n_yaw_bins == 24);
    CHECK(t.train.head.codec.n_yaw_bins == 24);
    CHECK(t.codec.tilt_mode == TiltMode::kSignSymmetric);
    CHECK(t.eval.criteria == std::vector<Criterion>{Criterion::kCenterDistance});
    CHECK(t.eval.recall_positions == 11);
    CHECK(t.train.epochs == 7);
    CHECK(t.train.loss.weights.tilt == 2.5);
    CHECK(t.train.head.shared_widths == std::vector<Eigen::Index>{8, 4});
  }

  TEST_CASE("errors") {
    CHECK(kind_of(R"({"bogus": 1})") == ErrorKind::kConfigError);
    CHECK(kind_of(R"({"codec": {"n_yaw_bin": 12}})") == ErrorKind::kConfigError);
    CHECK(kind_of(R"({"slope_aug": {"p_s": "high"}})") == ErrorKind::kConfigError);
    CHECK(kind_of(R"({"slope_aug": {"p_s": 2}})") == ErrorKind::kConfigError);
    CHECK(kind_of(R"({"eval": {"recall_positions": 12}})") == ErrorKind::kConfigError);
    CHECK(kind_of("[1, 2]") == ErrorKind::kConfigError);
    CHECK(kind_of("{") == ErrorKind::kConfigError);
    try {
      parse_config(R"({"codec": {"n_yaw_bin": 12}})");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("codec.n_yaw_bin") != std::string::npos);
    }
    const LoadedConfig lenient = parse_config(R"({"bogus": 1})", {.strict = false});
    CHECK(lenient.warnings.size() == 1);
    CHECK_THROWS_AS(load_config("/nonexistent/det6d.json"), Error);
  }

  TEST_CASE("dump is a complete template") {
    ToolkitConfig cfg;
    cfg.slope_aug.p_s = 0.3;
    cfg.codec.n_yaw_bins = 8;
    const ToolkitConfig back = parse_config(dump_config(cfg)).config;
    CHECK(back.slope_aug.p_s == 0.3);
    CHECK(back.codec.n_yaw_bins == 8);
    CHECK(std::abs(back.codec.t_theta_x - cfg.codec.t_theta_x) < 1e-15);
    CHECK(dump_config(back) == dump_config(cfg));
  }
}
