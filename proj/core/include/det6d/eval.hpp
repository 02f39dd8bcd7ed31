#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "det6d/geom.hpp"

namespace det6d {

enum class Criterion { kIou3d, kBev, kCenterDistance };

std::string criterion_name(Criterion c);
std::optional<Criterion> criterion_from_name(std::string_view name);

struct MatchCriterion {
  Criterion kind = Criterion::kIou3d;
  double threshold = 0.7;  // IoU lower bound, or distance upper bound in meters
  bool bev_distance = false;

  void validate() const;
};

struct TpErrors {
  double translation = 0.0;  // meters
  double scale_iou = 1.0;    // IoU after aligning center and orientation
  double orientation = 0.0;  // SO(3) geodesic angle, radians
};

struct DetectionMatch {
  bool tp = false;
  bool ignored = false;  // matched a GT outside the evaluated difficulty
  int gt = -1;
  double score = 0.0;
  TpErrors errors;
};

struct MatchResult {
  std::vector<DetectionMatch> detections;  // input order
  std::vector<bool> gt_matched;
  std::size_t gt_count = 0;  // GTs that count towards recall
};

/// Greedy matching in descending score order; each detection takes the best
/// unmatched GT that satisfies the criterion (max IoU or min distance,
/// lowest index on ties). GTs with gt_care[i] == false can absorb a
/// detection but count neither as TP nor towards recall.
MatchResult match(std::span<const FullPoseBox> dets, std::span<const FullPoseBox> gts,
                  const MatchCriterion& criterion, std::span<const bool> gt_care = {});

TpErrors tp_errors(const FullPoseBox& det, const FullPoseBox& gt, bool bev_distance = false);

/// Geodesic distance between two rotations, in [0, pi].
double rotation_geodesic(const Mat3& a, const Mat3& b);

struct ScoredOutcome {
  double score = 0.0;
  bool tp = false;
};

/// Interpolated AP. positions = 11 samples recall at {0, 0.1, ..., 1};
/// positions = 40 samples {1/40, ..., 1}. Equal scores form one threshold.
double average_precision(std::span<const ScoredOutcome> outcomes, std::size_t gt_count,
                         int positions);

struct TpScores {
  double ats = 0.0;
  double ass = 0.0;
  double aos = 0.0;
  std::size_t tp_count = 0;
  bool defined = false;  // false when there is no TP; scores are then 0
};

TpScores tp_scores(std::span<const DetectionMatch> matches, double distance_threshold);

/// (3 ap_cd + ats + ass + aos) / 6; every input must lie in [0,1].
double rods(double ap_cd, double ats, double ass, double aos);

enum class Difficulty { kEasy = 0, kModerate = 1, kHard = 2, kIgnored = 3 };

std::string difficulty_name(Difficulty d);

struct KittiMeta {
  double bbox_height = 0.0;  // pixels
  int occlusion = 0;
  double truncation = 0.0;
};

/// KITTI thresholds; boxes without metadata are Moderate.
Difficulty assign_difficulty(const std::optional<KittiMeta>& meta);

struct GtBox {
  FullPoseBox box;
  Difficulty difficulty = Difficulty::kModerate;
};

struct EvalConfig {
  double iou_threshold = 0.7;
  double cd_threshold = 1.0;
  int recall_positions = 40;
  bool cd_bev = false;
  std::vector<Criterion> criteria{Criterion::kIou3d, Criterion::kBev, Criterion::kCenterDistance};

  void validate() const;
};

struct ReportRow {
  std::string cls;
  std::string difficulty;
  std::string criterion;
  std::string metric;
  double value = 0.0;
};

struct RotatedSuite {
  double ap_cd = 0.0;
  double ats = 0.0;
  double ass = 0.0;
  double aos = 0.0;
  double rods = 0.0;
  bool tp_defined = false;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::map<int, RotatedSuite> rotated;  // per class id

  std::optional<double> find(std::string_view cls, std::string_view difficulty,
                             std::string_view criterion, std::string_view metric) const;
};

using FrameBoxes = std::map<std::string, std::vector<FullPoseBox>>;
using FrameGts = std::map<std::string, std::vector<GtBox>>;

/// 3D and BEV AP per difficulty (cumulative buckets, empty buckets omitted)
/// plus the unbucketed
/// rotated-3D suite, for every class present in the ground truth.
EvalReport evaluate(const FrameBoxes& dets, const FrameGts& gts, const EvalConfig& cfg);

/// Header: class,difficulty,criterion,metric,value
void write_report_csv(std::ostream& os, const EvalReport& report);
void write_report_table(std::ostream& os, const EvalReport& report);

}  // namespace det6d
