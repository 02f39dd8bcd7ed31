#include "det6d/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "det6d/error.hpp"

namespace det6d {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Walks one JSON object, remembering which keys were consumed so the rest
// can be reported.
class Section {
 public:
  Section(const json& j, std::string path, const ConfigOptions& opt, std::vector<std::string>& warnings)
      : j_(j), path_(std::move(path)), opt_(opt), warnings_(warnings) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      fail(full(key), "wrong type");
    }
  }

  void get_deg(const char* key, double& radians) {
    double deg = rad_to_deg(radians);
    get(key, deg);
    radians = deg_to_rad(deg);
  }

  template <class Fn>
  void child(const char* key, Fn&& fn) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    Section s(*it, full(key), opt_, warnings_);
    fn(s);
    s.finish();
  }

  std::optional<std::string> string_key(const char* key) {
    std::optional<std::string> out;
    if (j_.contains(key)) {
      std::string s;
      get(key, s);
      out = s;
    } else {
      seen_.insert(key);
    }
    return out;
  }

  [[noreturn]] static void fail(const std::string& key, const std::string& what) {
    throw Error(ErrorKind::kConfigError, "config key '" + key + "': " + what);
  }

  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() {
    for (const auto& [key, value] : j_.items()) {
      if (seen_.count(key)) continue;
      if (opt_.strict) fail(full(key), "unknown key");
      warnings_.push_back("ignoring unknown config key '" + full(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  const ConfigOptions& opt_;
  std::vector<std::string>& warnings_;
  std::set<std::string> seen_;
};

void read_codec(Section& s, CodecConfig& c) {
  s.get("n_yaw_bins", c.n_yaw_bins);
  s.get_deg("t_theta_x_deg", c.t_theta_x);
  s.get_deg("t_theta_y_deg", c.t_theta_y);
  s.get("strict_eq3", c.strict_eq3);
  if (auto mode = s.string_key("tilt_mode")) {
    if (*mode == "affine") c.tilt_mode = TiltMode::kAffine;
    else if (*mode == "sign_symmetric") c.tilt_mode = TiltMode::kSignSymmetric;
    else Section::fail(s.full("tilt_mode"), "expected 'affine' or 'sign_symmetric'");
  }
}

void read_slope_aug(Section& s, SlopeAugConfig& c) {
  s.get("p_s", c.p_s);
  s.get("r_min", c.r_range.lo);
  s.get("r_max", c.r_range.hi);
  s.get_deg("alpha_min_deg", c.alpha_range.lo);
  s.get_deg("alpha_max_deg", c.alpha_range.hi);
  s.get_deg("gamma_min_deg", c.gamma_range.lo);
  s.get_deg("gamma_max_deg", c.gamma_range.hi);
  s.get("exact_pose", c.exact_pose);
  if (auto sign = s.string_key("gamma_sign")) {
    if (*sign == "both") c.gamma_sign = GammaSign::kBoth;
    else if (*sign == "up") c.gamma_sign = GammaSign::kUp;
    else if (*sign == "down") c.gamma_sign = GammaSign::kDown;
    else Section::fail(s.full("gamma_sign"), "expected 'both', 'up' or 'down'");
  }
}

void read_eval(Section& s, EvalConfig& c) {
  s.get("iou_threshold", c.iou_threshold);
  s.get("cd_threshold", c.cd_threshold);
  s.get("recall_positions", c.recall_positions);
  s.get("cd_bev", c.cd_bev);
  std::vector<std::string> names;
  s.get("criteria", names);
  const bool have = !names.empty();
  if (have) {
    c.criteria.clear();
    for (const auto& n : names) {
      const auto crit = criterion_from_name(n);
      if (!crit) Section::fail(s.full("criteria"), "unknown criterion '" + n + "'");
      c.criteria.push_back(*crit);
    }
  }
}

void read_head(Section& s, HeadConfig& c) {
  s.get("feature_dim", c.feature_dim);
  s.get("shared_widths", c.shared_widths);
  s.get("seg_widths", c.seg_widths);
  s.get("class_count", c.class_count);
}

void read_train(Section& s, TrainConfig& c) {
  s.get("epochs", c.epochs);
  s.get("lr", c.lr);
  s.get("batch_size", c.batch_size);
  s.child("loss", [&](Section& l) {
    l.child("weights", [&](Section& w) {
      LossWeights& lw = c.loss.weights;
      w.get("cls", lw.cls);
      w.get("seg", lw.seg);
      w.get("tilt", lw.tilt);
      w.get("yaw_cls", lw.yaw_cls);
      w.get("yaw_reg", lw.yaw_reg);
      w.get("dim", lw.dim);
      w.get("posi", lw.posi);
    });
    l.get("focal_alpha", c.loss.focal.alpha);
    l.get("focal_gamma", c.loss.focal.gamma);
    l.get("smooth_l1_beta", c.loss.smooth_l1_beta);
  });
}

void read_dataset(Section& s, ToyDatasetSpec& d) {
  s.get("scenes", d.scenes);
  s.get("ramp_deg", d.ramp_deg);
  s.get("crease_x", d.crease_x);
  s.get("boxes_per_scene", d.boxes_per_scene);
  s.get("density", d.density);
  s.get("feature_noise", d.feature_noise);
  s.get("background_per_frame", d.features.background_per_frame);
  s.get("neighbor_radius", d.features.neighbor_radius);
  s.get("noise_channels", d.features.noise_channels);
  s.get("center_jitter", d.features.center_jitter);
}

void check(bool ok, const char* key, const std::string& what) {
  if (!ok) Section::fail(key, what);
}

}  // namespace

void ToolkitConfig::validate() const {
  check(num_points > 0, "num_points", "must be positive");
  check(!sampling.empty(), "sampling", "must list at least one stage");
  for (std::size_t i = 0; i < sampling.size(); ++i) {
    check(sampling[i] > 0 && sampling[i] <= (i == 0 ? num_points : sampling[i - 1]), "sampling",
          "stages must be positive and non-increasing, and not exceed num_points");
  }
  check(nms_iou >= 0.0 && nms_iou <= 1.0, "nms_iou", "must lie in [0, 1]");
  check(train.epochs >= 0, "train.epochs", "must be non-negative");
  check(train.lr > 0.0, "train.lr", "must be positive");
  check(train.batch_size > 0, "train.batch_size", "must be positive");
  check(dataset.scenes > 0, "dataset.scenes", "must be positive");
  check(dataset.density > 0.0, "dataset.density", "must be positive");
  check(dataset.feature_noise >= 0.0, "dataset.feature_noise", "must be non-negative");
  try {
    codec.validate();
    slope_aug.validate();
    eval.validate();
    train.head.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfigError, e.what());
  }
}

LoadedConfig parse_config(const std::string& json_text, ConfigOptions options) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  LoadedConfig out;
  ToolkitConfig& c = out.config;
  Section s(root, "", options, out.warnings);
  s.get("num_points", c.num_points);
  s.get("sampling", c.sampling);
  s.get("nms_iou", c.nms_iou);
  s.child("codec", [&](Section& x) { read_codec(x, c.codec); });
  s.child("slope_aug", [&](Section& x) { read_slope_aug(x, c.slope_aug); });
  s.child("eval", [&](Section& x) { read_eval(x, c.eval); });
  s.child("head", [&](Section& x) { read_head(x, c.train.head); });
  s.child("train", [&](Section& x) { read_train(x, c.train); });
  s.child("dataset", [&](Section& x) { read_dataset(x, c.dataset); });
  s.finish();

  c.train.head.codec = c.codec;
  c.dataset.features.codec = c.codec;
  c.dataset.features.class_count = c.train.head.class_count;
  c.validate();
  return out;
}

LoadedConfig load_config(const std::filesystem::path& path, ConfigOptions options) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), options);
}

std::string dump_config(const ToolkitConfig& c) {
  ordered_json j;
  j["num_points"] = c.num_points;
  j["sampling"] = c.sampling;
  j["nms_iou"] = c.nms_iou;
  j["codec"] = {{"n_yaw_bins", c.codec.n_yaw_bins},
                {"t_theta_x_deg", rad_to_deg(c.codec.t_theta_x)},
                {"t_theta_y_deg", rad_to_deg(c.codec.t_theta_y)},
                {"strict_eq3", c.codec.strict_eq3},
                {"tilt_mode", c.codec.tilt_mode == TiltMode::kAffine ? "affine" : "sign_symmetric"}};
  const char* sign = c.slope_aug.gamma_sign == GammaSign::kBoth ? "both"
                     : c.slope_aug.gamma_sign == GammaSign::kUp ? "up"
                                                                 : "down";
  j["slope_aug"] = {{"p_s", c.slope_aug.p_s},
                    {"r_min", c.slope_aug.r_range.lo},
                    {"r_max", c.slope_aug.r_range.hi},
                    {"alpha_min_deg", rad_to_deg(c.slope_aug.alpha_range.lo)},
                    {"alpha_max_deg", rad_to_deg(c.slope_aug.alpha_range.hi)},
                    {"gamma_min_deg", rad_to_deg(c.slope_aug.gamma_range.lo)},
                    {"gamma_max_deg", rad_to_deg(c.slope_aug.gamma_range.hi)},
                    {"gamma_sign", sign},
                    {"exact_pose", c.slope_aug.exact_pose}};
  std::vector<std::string> crit;
  for (Criterion k : c.eval.criteria) crit.push_back(criterion_name(k));
  j["eval"] = {{"iou_threshold", c.eval.iou_threshold},
               {"cd_threshold", c.eval.cd_threshold},
               {"recall_positions", c.eval.recall_positions},
               {"cd_bev", c.eval.cd_bev},
               {"criteria", crit}};
  j["head"] = {{"feature_dim", c.train.head.feature_dim},
               {"shared_widths", c.train.head.shared_widths},
               {"seg_widths", c.train.head.seg_widths},
               {"class_count", c.train.head.class_count}};
  const LossWeights& w = c.train.loss.weights;
  j["train"] = {{"epochs", c.train.epochs},
                {"lr", c.train.lr},
                {"batch_size", c.train.batch_size},
                {"loss",
                 {{"weights",
                   {{"cls", w.cls}, {"seg", w.seg}, {"tilt", w.tilt}, {"yaw_cls", w.yaw_cls},
                    {"yaw_reg", w.yaw_reg}, {"dim", w.dim}, {"posi", w.posi}}},
                  {"focal_alpha", c.train.loss.focal.alpha},
                  {"focal_gamma", c.train.loss.focal.gamma},
                  {"smooth_l1_beta", c.train.loss.smooth_l1_beta}}}};
  j["dataset"] = {{"scenes", c.dataset.scenes},
                  {"ramp_deg", c.dataset.ramp_deg},
                  {"crease_x", c.dataset.crease_x},
                  {"boxes_per_scene", c.dataset.boxes_per_scene},
                  {"density", c.dataset.density},
                  {"feature_noise", c.dataset.feature_noise},
                  {"background_per_frame", c.dataset.features.background_per_frame},
                  {"neighbor_radius", c.dataset.features.neighbor_radius},
                  {"noise_channels", c.dataset.features.noise_channels},
                  {"center_jitter", c.dataset.features.center_jitter}};
  return j.dump(2) + "\n";
}

}  // namespace det6d
