#include "det6d_cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "det6d/classes.hpp"
#include "det6d/config.hpp"
#include "det6d/error.hpp"
#include "det6d/head.hpp"
#include "det6d/io.hpp"
#include "det6d/param_io.hpp"
#include "det6d/random.hpp"
#include "det6d/synth.hpp"
#include "det6d/verification.hpp"
#include "det6d_cli/dataset.hpp"

namespace det6d::cli {
namespace {

using json = nlohmann::ordered_json;

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string summary;
  bool lenient = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Global random seed");
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--summary", c.summary, "Write the JSON summary here instead of stdout");
  app->add_flag("--lenient", c.lenient, "Warn about unknown config keys instead of failing");
}

ToolkitConfig load(const Common& c, std::ostream& err) {
  LoadedConfig lc = c.config.empty() ? parse_config("{}")
                                     : load_config(c.config, ConfigOptions{!c.lenient});
  for (const auto& w : lc.warnings) err << "warning: " << w << '\n';
  return lc.config;
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) {
    throw Error(ErrorKind::kIoError, std::string(what) + " '" + p.string() + "' is not a directory");
  }
}

std::string frame_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
  std::string input, output;
  std::optional<double> p_s, gamma_min, gamma_max, r_min, r_max;
};

json cmd_augment(const AugmentArgs& a, const Common& c, std::ostream& err) {
  const ToolkitConfig cfg_all = load(c, err);
  SlopeAugConfig cfg = cfg_all.slope_aug;
  if (a.p_s) cfg.p_s = *a.p_s;
  if (a.gamma_min) cfg.gamma_range.lo = deg_to_rad(*a.gamma_min);
  if (a.gamma_max) cfg.gamma_range.hi = deg_to_rad(*a.gamma_max);
  if (a.r_min) cfg.r_range.lo = *a.r_min;
  if (a.r_max) cfg.r_range.hi = *a.r_max;
  cfg.seed = c.seed;
  cfg.validate();

  require_dir(a.input, "input");
  if (fs::exists(a.output) && fs::equivalent(a.input, a.output)) {
    throw Error(ErrorKind::kIoError, "output must differ from input");
  }
  const auto frames = list_velodyne_frames(a.input);
  if (frames.empty()) throw Error(ErrorKind::kEmptyDataset, "no velodyne frames under " + a.input);
  const RecordsByFrame records = read_records(a.input);
  for (const auto& [frame, recs] : records) {
    if (!std::binary_search(frames.begin(), frames.end(), frame)) {
      err << "warning: labels for frame '" << frame << "' have no point cloud; skipped\n";
    }
  }
  fs::create_directories(fs::path(a.output) / "velodyne");

  std::vector<std::vector<FullPoseBox>> boxes(frames.size());
  std::vector<char> changed(frames.size(), 0);
  parallel_for(frames.size(), c.jobs, [&](std::size_t i) {
    Rng rng(frame_seed(c.seed, frames[i]));
    const LabeledFrame in = load_frame(a.input, frames[i], records);
    LabeledFrame out = augment(in, cfg, rng);
    changed[i] = out.cloud.points != in.cloud.points;
    io::write_velodyne(out.cloud, velodyne_path(a.output, frames[i]));
    boxes[i] = std::move(out.boxes);
  });

  std::vector<io::Pose6dRecord> out_records;
  std::size_t box_count = 0, augmented = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    augmented += changed[i] ? 1 : 0;
    const auto it = records.find(frames[i]);
    for (std::size_t b = 0; b < boxes[i].size(); ++b) {
      io::Pose6dRecord r = io::Pose6dRecord::from_box(frames[i], boxes[i][b]);
      if (it != records.end()) r.difficulty = it->second[b].difficulty;
      out_records.push_back(std::move(r));
      ++box_count;
    }
  }
  io::write_pose6d(labels_path(a.output), out_records);
  err << "augmented " << augmented << " of " << frames.size() << " frames\n";
  return {{"command", "augment"}, {"frames", frames.size()}, {"augmented", augmented},
          {"boxes", box_count}, {"output", a.output}};
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  std::size_t scenes = 0;
  std::optional<double> ramp_deg;
  std::optional<std::size_t> boxes;
  std::optional<double> density;
  double noise = 0.0;
  std::string output;
};

json cmd_synth(const SynthArgs& a, const Common& c, std::ostream& err) {
  const ToolkitConfig cfg = load(c, err);
  SceneSpec spec;
  const double ramp = a.ramp_deg.value_or(cfg.dataset.ramp_deg);
  spec.terrain = ramp == 0.0 ? Terrain::flat() : Terrain::ramp(deg_to_rad(ramp));
  spec.terrain.ramp_start.x() = cfg.dataset.crease_x;
  spec.box_count = a.boxes.value_or(cfg.dataset.boxes_per_scene);
  spec.density = a.density.value_or(cfg.dataset.density);
  spec.noise_sigma = a.noise;
  spec.seed = c.seed;
  spec.validate();

  fs::create_directories(fs::path(a.output) / "velodyne");
  std::vector<std::vector<FullPoseBox>> boxes(a.scenes);
  std::vector<std::size_t> points(a.scenes);
  parallel_for(a.scenes, c.jobs, [&](std::size_t s) {
    const std::string id = frame_name(s);
    Rng rng(frame_seed(c.seed, id));
    boxes[s] = place_boxes(spec.terrain, spec, rng);
    const LabeledFrame f = sample_scene(spec.terrain, boxes[s], spec, rng, id);
    io::write_velodyne(f.cloud, velodyne_path(a.output, id));
    points[s] = f.cloud.size();
  });
  std::vector<io::Pose6dRecord> recs;
  std::size_t total_points = 0;
  for (std::size_t s = 0; s < a.scenes; ++s) {
    total_points += points[s];
    for (const auto& b : boxes[s]) recs.push_back(io::Pose6dRecord::from_box(frame_name(s), b));
  }
  io::write_pose6d(labels_path(a.output), recs);
  err << "wrote " << a.scenes << " scenes to " << a.output << '\n';
  return {{"command", "synth"}, {"scenes", a.scenes}, {"ramp_deg", ramp}, {"boxes", recs.size()},
          {"points", total_points}, {"output", a.output}};
}

// ------------------------------------------------------------- train-head

struct TrainArgs {
  std::string data, out, log;
  std::optional<int> epochs;
};

json terms_json(const LossTerms& t) {
  return {{"total", t.total}, {"cls", t.cls},         {"seg", t.seg}, {"tilt", t.tilt},
          {"yaw_cls", t.yaw_cls}, {"yaw_reg", t.yaw_reg}, {"dim", t.dim}, {"posi", t.posi}};
}

json cmd_train(const TrainArgs& a, const Common& c, std::ostream& err) {
  const ToolkitConfig cfg = load(c, err);
  require_dir(a.data, "data");
  const auto frames = list_velodyne_frames(a.data);
  if (frames.empty()) throw Error(ErrorKind::kEmptyDataset, "no velodyne frames under " + a.data);
  const RecordsByFrame records = read_records(a.data);

  const FeatureSpec& fspec = cfg.dataset.features;
  std::vector<ToySample> samples(frames.size());
  parallel_for(frames.size(), c.jobs, [&](std::size_t i) {
    Rng rng(frame_seed(c.seed, frames[i]));
    samples[i] = make_features(load_frame(a.data, frames[i], records), cfg.dataset.feature_noise, rng, fspec);
  });

  TrainConfig tc = cfg.train;
  tc.head.feature_dim = fspec.feature_dim();
  tc.head.class_count = fspec.class_count;
  if (a.epochs) tc.epochs = *a.epochs;
  tc.seed = c.seed;
  tc.head.validate();
  err << "training on " << frames.size() << " frames for " << tc.epochs << " epochs\n";
  const TrainResult result = train_toy(samples, tc);

  const auto mlps = result.params.to_list();
  nn::write_params(a.out, mlps);
  const std::string log_path = a.log.empty() ? a.out + ".log.csv" : a.log;
  {
    std::ofstream f(log_path);
    if (!f) throw Error(ErrorKind::kIoError, "cannot open " + log_path + " for writing");
    write_training_log(f, result.log);
  }
  const HeadMetrics m = evaluate_head(result.params, samples, tc.head.codec);
  json summary = {{"command", "train-head"},
                  {"frames", frames.size()},
                  {"epochs", tc.epochs},
                  {"parameters", result.params.parameter_count()},
                  {"params", a.out},
                  {"log", log_path},
                  {"seg_f1", m.seg_f1},
                  {"roll_mae_deg", m.roll_mae_deg},
                  {"pitch_mae_deg", m.pitch_mae_deg},
                  {"class_accuracy", m.class_accuracy},
                  {"gated_flat", m.gated_flat},
                  {"gated_nonzero", m.gated_nonzero}};
  if (!result.log.empty()) summary["final_loss"] = terms_json(result.log.back().terms);
  return summary;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string gt, pred, criterion, csv, calib;
  std::optional<int> positions;
};

json cmd_eval(const EvalArgs& a, const Common& c, std::ostream& err) {
  const ToolkitConfig cfg = load(c, err);
  EvalConfig ec = cfg.eval;
  if (!a.criterion.empty()) ec.criteria = {*criterion_from_name(a.criterion)};
  if (a.positions) ec.recall_positions = *a.positions;
  ec.validate();

  std::optional<fs::path> calib;
  if (!a.calib.empty()) calib = a.calib;
  const FrameGts gts = load_ground_truth(a.gt, calib);
  if (gts.empty()) throw Error(ErrorKind::kEmptyDataset, "no ground-truth frames under " + a.gt);
  const Predictions pred = load_predictions(a.pred, calib);
  if (pred.unscored > 0) {
    err << "warning: " << pred.unscored << " predictions without a score were given score 1\n";
  }
  const EvalReport report = evaluate(pred.boxes, gts, ec);
  write_report_table(err, report);
  if (!a.csv.empty()) {
    std::ofstream f(a.csv);
    if (!f) throw Error(ErrorKind::kIoError, "cannot open " + a.csv + " for writing");
    write_report_csv(f, report);
  }
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"class", r.cls}, {"difficulty", r.difficulty}, {"criterion", r.criterion},
                    {"metric", r.metric}, {"value", r.value}});
  }
  json rotated = json::object();
  for (const auto& [cls, s] : report.rotated) {
    rotated[class_name(cls)] = {{"ap_cd", s.ap_cd}, {"ats", s.ats}, {"ass", s.ass},
                                {"aos", s.aos},     {"rods", s.rods}, {"tp_defined", s.tp_defined}};
  }
  return {{"command", "eval"}, {"frames", gts.size()}, {"recall_positions", ec.recall_positions},
          {"rows", rows}, {"rotated", rotated}};
}

// ------------------------------------------------------------------ stats

struct Histogram {
  std::string quantity;
  double lo, width;
  std::vector<std::size_t> counts;
  std::size_t below = 0, above = 0;

  Histogram(std::string q, double lo_, double hi, double w)
      : quantity(std::move(q)), lo(lo_), width(w),
        counts(static_cast<std::size_t>(std::llround((hi - lo_) / w)), 0) {}

  void add(double v) {
    if (v < lo) {
      ++below;
      return;
    }
    const auto k = static_cast<std::size_t>(std::floor((v - lo) / width));
    if (k >= counts.size()) {
      ++above;
      return;
    }
    ++counts[k];
  }
};

struct StatsArgs {
  std::string input, out, calib;
};

json cmd_stats(const StatsArgs& a, const Common& c, std::ostream& err) {
  load(c, err);
  std::optional<fs::path> calib;
  if (!a.calib.empty()) calib = a.calib;
  const FrameGts gts = load_ground_truth(a.input, calib);
  std::vector<Histogram> h{{"roll_deg", -45, 45, 1},  {"pitch_deg", -45, 45, 1},
                           {"yaw_deg", -180, 180, 10}, {"length_m", 0, 20, 0.25},
                           {"width_m", 0, 10, 0.25},   {"height_m", 0, 10, 0.25},
                           {"center_x_m", -80, 80, 2}, {"center_y_m", -80, 80, 2},
                           {"center_z_m", -5, 5, 0.5}};
  std::size_t boxes = 0;
  for (const auto& [frame, list] : gts) {
    for (const auto& g : list) {
      const FullPoseBox& b = g.box;
      h[0].add(rad_to_deg(b.euler.roll));
      h[1].add(rad_to_deg(b.euler.pitch));
      h[2].add(rad_to_deg(b.euler.yaw));
      h[3].add(b.dims.l);
      h[4].add(b.dims.w);
      h[5].add(b.dims.h);
      h[6].add(b.center.x());
      h[7].add(b.center.y());
      h[8].add(b.center.z());
      ++boxes;
    }
  }
  std::ofstream f(a.out);
  if (!f) throw Error(ErrorKind::kIoError, "cannot open " + a.out + " for writing");
  f << "quantity,bin_lo,bin_hi,count,log10_count\n";
  f << std::setprecision(10);
  json outside = json::object();
  for (const auto& hist : h) {
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
      const double lo = hist.lo + static_cast<double>(k) * hist.width;
      f << hist.quantity << ',' << lo << ',' << lo + hist.width << ',' << hist.counts[k] << ',';
      if (hist.counts[k] > 0) f << std::log10(static_cast<double>(hist.counts[k]));
      f << '\n';
    }
    outside[hist.quantity] = {{"below", hist.below}, {"above", hist.above}};
  }
  err << "histogrammed " << boxes << " boxes from " << gts.size() << " frames\n";
  return {{"command", "stats"}, {"frames", gts.size()}, {"boxes", boxes}, {"out", a.out},
          {"out_of_range", outside}};
}

// -------------------------------------------------------------------- nms

struct NmsArgs {
  std::string pred, out;
  std::optional<double> iou;
};

json cmd_nms(const NmsArgs& a, const Common& c, std::ostream& err, std::ostream& out,
             bool& summary_to_err) {
  const ToolkitConfig cfg = load(c, err);
  const double thr = a.iou.value_or(cfg.nms_iou);
  const RecordsByFrame records = read_records(a.pred);
  std::vector<io::Pose6dRecord> kept;
  std::size_t total = 0;
  for (const auto& [frame, recs] : records) {
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < recs.size(); ++i) by_class[recs[i].cls].push_back(i);
    for (const auto& [cls, idx] : by_class) {
      std::vector<FullPoseBox> boxes;
      for (std::size_t i : idx) boxes.push_back(recs[i].to_box());
      for (std::size_t k : nms(boxes, thr)) kept.push_back(recs[idx[k]]);
    }
    total += recs.size();
  }
  if (a.out.empty()) {
    io::write_pose6d(out, kept);
    summary_to_err = true;
  } else {
    io::write_pose6d(a.out, kept);
  }
  return {{"command", "nms"}, {"iou", thr}, {"input", total}, {"kept", kept.size()}};
}

// -------------------------------------------------------------- gradcheck

json cmd_gradcheck(int points, const Common& c, std::ostream& err, bool& ok) {
  load(c, err);
  constexpr double kTolerance = 1e-6;
  const auto entries = run_gradient_suite(c.seed, points);
  json rows = json::array();
  double worst = 0.0;
  for (const auto& e : entries) {
    const bool pass = e.max_rel_error < kTolerance;
    err << std::left << std::setw(22) << e.name << ' ' << std::scientific << std::setprecision(3)
        << e.max_rel_error << (pass ? "  ok" : "  FAIL") << '\n'
        << std::defaultfloat;
    rows.push_back({{"name", e.name}, {"max_rel_error", e.max_rel_error}, {"checked", e.checked},
                    {"points", e.points}, {"redrawn", e.redrawn}, {"pass", pass}});
    worst = std::max(worst, e.max_rel_error);
  }
  ok = worst < kTolerance;
  err << "max relative error " << std::scientific << worst << std::defaultfloat << '\n';
  return {{"command", "gradcheck"}, {"points", points}, {"max_rel_error", worst},
          {"tolerance", kTolerance}, {"pass", ok}, {"entries", rows}};
}

// ---------------------------------------------------------------- convert

struct ConvertArgs {
  std::string from, to, labels, calib, input, out;
};

json cmd_convert(const ConvertArgs& a, const Common& c, std::ostream& err) {
  load(c, err);
  if (a.from == "kitti" && a.to == "pose6d") {
    if (a.labels.empty() || a.calib.empty()) {
      throw CLI::ValidationError("kitti -> pose6d needs --labels DIR and --calib DIR");
    }
    require_dir(a.labels, "labels");
    require_dir(a.calib, "calib");
    const RecordsByFrame recs = read_kitti_records(a.labels, a.calib);
    std::vector<io::Pose6dRecord> flat;
    for (const auto& [frame, list] : recs) flat.insert(flat.end(), list.begin(), list.end());
    io::write_pose6d(a.out, flat);
    err << "converted " << flat.size() << " objects from " << recs.size() << " frames\n";
    return {{"command", "convert"}, {"frames", recs.size()}, {"records", flat.size()}, {"out", a.out}};
  }
  if (a.from == "velodyne" && a.to == "ply") {
    if (a.input.empty()) throw CLI::ValidationError("velodyne -> ply needs --input FILE");
    const PointCloud cloud = io::read_velodyne(a.input);
    io::write_ply(a.out, cloud);
    return {{"command", "convert"}, {"points", cloud.size()}, {"out", a.out}};
  }
  throw CLI::ValidationError("unsupported conversion " + a.from + " -> " + a.to);
}

void emit(const json& summary, const Common& c, std::ostream& out) {
  if (c.summary.empty()) {
    out << summary.dump(2) << '\n';
    return;
  }
  std::ofstream f(c.summary);
  if (!f) throw Error(ErrorKind::kIoError, "cannot open " + c.summary + " for writing");
  f << summary.dump(2) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Full-pose 3D detection toolkit: augmentation, synthesis, training and evaluation",
               "det6d"};
  app.require_subcommand(1);

  Common common;

  AugmentArgs aug;
  auto* augment_cmd = app.add_subcommand("augment", "Slope augmentation over a dataset");
  add_common(augment_cmd, common);
  augment_cmd->add_option("--input", aug.input, "Input dataset directory")->required();
  augment_cmd->add_option("--output", aug.output, "Output dataset directory")->required();
  augment_cmd->add_option("--p-s", aug.p_s, "Probability of augmenting a frame")
      ->check(CLI::Range(0.0, 1.0));
  augment_cmd->add_option("--gamma-min", aug.gamma_min, "Smallest slope angle, degrees");
  augment_cmd->add_option("--gamma-max", aug.gamma_max, "Largest slope angle, degrees");
  augment_cmd->add_option("--r-min", aug.r_min, "Smallest anchor distance, meters");
  augment_cmd->add_option("--r-max", aug.r_max, "Largest anchor distance, meters");

  SynthArgs syn;
  auto* synth_cmd = app.add_subcommand("synth", "Generate labeled synthetic scenes");
  add_common(synth_cmd, common);
  synth_cmd->add_option("--scenes", syn.scenes, "Number of scenes")->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--ramp-deg", syn.ramp_deg, "Ramp grade in degrees (0 for flat)")
      ->check(CLI::Range(0.0, 60.0));
  synth_cmd->add_option("--boxes", syn.boxes, "Boxes per scene");
  synth_cmd->add_option("--density", syn.density, "Points per square meter")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise", syn.noise, "Gaussian point noise, meters")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--output", syn.output, "Output dataset directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train-head", "Train the toy ground-aware head");
  add_common(train_cmd, common);
  train_cmd->add_option("--data", tr.data, "Synthetic dataset directory")->required();
  train_cmd->add_option("--epochs", tr.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--out", tr.out, "Output parameter file")->required();
  train_cmd->add_option("--log", tr.log, "Loss log CSV (default: <out>.log.csv)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--gt", ev.gt, "Ground-truth dataset directory or pose6d file")->required();
  eval_cmd->add_option("--pred", ev.pred, "Prediction dataset directory or pose6d file")->required();
  eval_cmd->add_option("--criterion", ev.criterion, "Restrict to one criterion")
      ->check(CLI::IsMember({"iou3d", "bev", "cd"}));
  eval_cmd->add_option("--recall-positions", ev.positions, "11 or 40")->check(CLI::IsMember({11, 40}));
  eval_cmd->add_option("--csv", ev.csv, "Write the report as CSV");
  eval_cmd->add_option("--calib", ev.calib, "KITTI calibration directory");

  StatsArgs st;
  auto* stats_cmd = app.add_subcommand("stats", "Pose, dimension and center histograms");
  add_common(stats_cmd, common);
  stats_cmd->add_option("--input", st.input, "Dataset directory or pose6d file")->required();
  stats_cmd->add_option("--out", st.out, "Output CSV")->required();
  stats_cmd->add_option("--calib", st.calib, "KITTI calibration directory");

  NmsArgs nm;
  auto* nms_cmd = app.add_subcommand("nms", "Non-maximum suppression on a prediction file");
  add_common(nms_cmd, common);
  nms_cmd->add_option("--pred", nm.pred, "pose6d prediction file")->required()->check(CLI::ExistingFile);
  nms_cmd->add_option("--iou", nm.iou, "BEV IoU threshold")->check(CLI::Range(0.0, 1.0));
  nms_cmd->add_option("--out", nm.out, "Output pose6d file (default: stdout)");

  int grad_points = 10;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Run the gradient verification suite");
  add_common(grad_cmd, common);
  grad_cmd->add_option("--points", grad_points, "Random points per check")->check(CLI::PositiveNumber);

  ConvertArgs cv;
  auto* convert_cmd = app.add_subcommand("convert", "Format conversion");
  add_common(convert_cmd, common);
  convert_cmd->add_option("--from", cv.from, "Source format")->required()->check(CLI::IsMember({"kitti", "velodyne"}));
  convert_cmd->add_option("--to", cv.to, "Target format")->required()->check(CLI::IsMember({"pose6d", "ply"}));
  convert_cmd->add_option("--labels", cv.labels, "KITTI label_2 directory");
  convert_cmd->add_option("--calib", cv.calib, "KITTI calibration directory");
  convert_cmd->add_option("--input", cv.input, "Input file");
  convert_cmd->add_option("--out", cv.out, "Output file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    json summary;
    bool ok = true;
    bool summary_to_err = false;
    if (augment_cmd->parsed()) summary = cmd_augment(aug, common, err);
    else if (synth_cmd->parsed()) summary = cmd_synth(syn, common, err);
    else if (train_cmd->parsed()) summary = cmd_train(tr, common, err);
    else if (eval_cmd->parsed()) summary = cmd_eval(ev, common, err);
    else if (stats_cmd->parsed()) summary = cmd_stats(st, common, err);
    else if (nms_cmd->parsed()) summary = cmd_nms(nm, common, err, out, summary_to_err);
    else if (grad_cmd->parsed()) summary = cmd_gradcheck(grad_points, common, err, ok);
    else if (convert_cmd->parsed()) summary = cmd_convert(cv, common, err);
    emit(summary, common, summary_to_err && common.summary.empty() ? err : out);
    return ok ? 0 : 1;
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error [IoError]: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace det6d::cli
