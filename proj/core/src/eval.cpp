#include "det6d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <numeric>
#include <ostream>
#include <set>

#include "det6d/classes.hpp"
#include "det6d/error.hpp"

namespace det6d {

std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::kIou3d: return "iou3d";
    case Criterion::kBev: return "bev";
    case Criterion::kCenterDistance: return "cd";
  }
  return "unknown";
}

std::optional<Criterion> criterion_from_name(std::string_view name) {
  for (Criterion c : {Criterion::kIou3d, Criterion::kBev, Criterion::kCenterDistance}) {
    if (criterion_name(c) == name) return c;
  }
  return std::nullopt;
}

void MatchCriterion::validate() const {
  if (kind == Criterion::kCenterDistance) {
    if (!(threshold > 0.0)) throw Error(ErrorKind::kInvalidConfig, "distance threshold must be positive");
  } else if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "IoU threshold must lie in (0,1]");
  }
}

double rotation_geodesic(const Mat3& a, const Mat3& b) {
  // atan2 of the skew and symmetric parts; acos loses ~1e-8 rad near zero.
  const Mat3 d = a.transpose() * b;
  const Vec3 skew(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  return std::atan2(0.5 * skew.norm(), 0.5 * (d.trace() - 1.0));
}

TpErrors tp_errors(const FullPoseBox& det, const FullPoseBox& gt, bool bev_distance) {
  TpErrors e;
  e.translation = center_distance(det, gt, bev_distance);
  const double inter = std::min(det.dims.l, gt.dims.l) * std::min(det.dims.w, gt.dims.w) *
                       std::min(det.dims.h, gt.dims.h);
  const double uni = det.dims.l * det.dims.w * det.dims.h + gt.dims.l * gt.dims.w * gt.dims.h - inter;
  e.scale_iou = uni > 0.0 ? inter / uni : 0.0;
  e.orientation = rotation_geodesic(euler_to_matrix(det.euler), euler_to_matrix(gt.euler));
  return e;
}

MatchResult match(std::span<const FullPoseBox> dets, std::span<const FullPoseBox> gts,
                  const MatchCriterion& criterion, std::span<const bool> gt_care) {
  criterion.validate();
  if (!gt_care.empty() && gt_care.size() != gts.size()) {
    throw Error(ErrorKind::kShapeMismatch, "gt_care must match the GT count");
  }
  for (const auto& d : dets) {
    if (!d.score) throw Error(ErrorKind::kMissingScore, "matching requires scored detections");
  }
  auto cared = [&](std::size_t g) { return gt_care.empty() || gt_care[g]; };

  MatchResult r;
  r.detections.resize(dets.size());
  r.gt_matched.assign(gts.size(), false);
  for (std::size_t g = 0; g < gts.size(); ++g) r.gt_count += cared(g);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return *dets[a].score > *dets[b].score; });

  for (std::size_t i : order) {
    DetectionMatch& m = r.detections[i];
    m.score = *dets[i].score;
    int best = -1;
    double best_affinity = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (r.gt_matched[g]) continue;
      double affinity = 0.0;
      bool ok = false;
      switch (criterion.kind) {
        case Criterion::kIou3d:
          affinity = iou3d(dets[i], gts[g]);
          ok = affinity >= criterion.threshold;
          break;
        case Criterion::kBev:
          affinity = bev_iou(dets[i], gts[g]);
          ok = affinity >= criterion.threshold;
          break;
        case Criterion::kCenterDistance: {
          const double d = center_distance(dets[i], gts[g], criterion.bev_distance);
          affinity = -d;
          ok = d <= criterion.threshold;
          break;
        }
      }
      if (ok && affinity > best_affinity) {
        best_affinity = affinity;
        best = static_cast<int>(g);
      }
    }
    if (best < 0) continue;
    r.gt_matched[static_cast<std::size_t>(best)] = true;
    m.gt = best;
    if (!cared(static_cast<std::size_t>(best))) {
      m.ignored = true;
      continue;
    }
    m.tp = true;
    m.errors = tp_errors(dets[i], gts[static_cast<std::size_t>(best)], criterion.bev_distance);
  }
  return r;
}

double average_precision(std::span<const ScoredOutcome> outcomes, std::size_t gt_count,
                         int positions) {
  if (positions != 11 && positions != 40) {
    throw Error(ErrorKind::kInvalidConfig, "recall positions must be 11 or 40");
  }
  if (gt_count == 0) return 0.0;
  std::vector<ScoredOutcome> sorted(outcomes.begin(), outcomes.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score > b.score; });

  // (recall, precision) after each distinct score.
  std::vector<std::pair<double, double>> curve;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    tp += sorted[i].tp;
    if (i + 1 < sorted.size() && sorted[i + 1].score == sorted[i].score) continue;
    curve.emplace_back(static_cast<double>(tp) / static_cast<double>(gt_count),
                       static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  // Envelope: best precision at recall >= r, scanning from the tail.
  std::vector<double> envelope(curve.size());
  double best = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    best = std::max(best, curve[i].second);
    envelope[i] = best;
  }
  double sum = 0.0;
  for (int k = 0; k < positions; ++k) {
    const double r = positions == 11 ? k / 10.0 : (k + 1) / 40.0;
    // First curve point reaching recall r carries the envelope value.
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (curve[i].first >= r - 1e-12) {
        sum += envelope[i];
        break;
      }
    }
  }
  return sum / positions;
}

TpScores tp_scores(std::span<const DetectionMatch> matches, double distance_threshold) {
  TpScores s;
  for (const auto& m : matches) {
    if (!m.tp) continue;
    ++s.tp_count;
    s.ats += 1.0 - std::min(1.0, m.errors.translation / distance_threshold);
    s.ass += m.errors.scale_iou;
    s.aos += 1.0 - m.errors.orientation / kPi;
  }
  if (s.tp_count == 0) return s;
  const auto n = static_cast<double>(s.tp_count);
  s.ats /= n;
  s.ass /= n;
  s.aos /= n;
  s.defined = true;
  return s;
}

double rods(double ap_cd, double ats, double ass, double aos) {
  for (double v : {ap_cd, ats, ass, aos}) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::kInputOutOfRange, "RODS inputs must lie in [0,1]");
  }
  return (3.0 * ap_cd + ats + ass + aos) / 6.0;
}

std::string difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kModerate: return "moderate";
    case Difficulty::kHard: return "hard";
    case Difficulty::kIgnored: return "ignored";
  }
  return "unknown";
}

Difficulty assign_difficulty(const std::optional<KittiMeta>& meta) {
  if (!meta) return Difficulty::kModerate;
  const KittiMeta& m = *meta;
  if (m.bbox_height >= 40 && m.occlusion <= 0 && m.truncation <= 0.15) return Difficulty::kEasy;
  if (m.bbox_height >= 25 && m.occlusion <= 1 && m.truncation <= 0.30) return Difficulty::kModerate;
  if (m.bbox_height >= 25 && m.occlusion <= 2 && m.truncation <= 0.50) return Difficulty::kHard;
  return Difficulty::kIgnored;
}

void EvalConfig::validate() const {
  MatchCriterion{Criterion::kIou3d, iou_threshold}.validate();
  MatchCriterion{Criterion::kCenterDistance, cd_threshold}.validate();
  if (recall_positions != 11 && recall_positions != 40) {
    throw Error(ErrorKind::kInvalidConfig, "recall positions must be 11 or 40");
  }
}

std::optional<double> EvalReport::find(std::string_view cls, std::string_view difficulty,
                                       std::string_view criterion, std::string_view metric) const {
  for (const auto& r : rows) {
    if (r.cls == cls && r.difficulty == difficulty && r.criterion == criterion && r.metric == metric) {
      return r.value;
    }
  }
  return std::nullopt;
}

namespace {

struct Pooled {
  std::vector<ScoredOutcome> outcomes;
  std::vector<DetectionMatch> matches;
  std::size_t gt_count = 0;
};

Pooled pool_class(const FrameBoxes& dets, const FrameGts& gts, int cls,
                  const MatchCriterion& criterion, std::optional<Difficulty> bucket) {
  Pooled p;
  for (const auto& [frame, frame_gts] : gts) {
    std::vector<FullPoseBox> g;
    auto care = std::make_unique<bool[]>(frame_gts.size());
    for (const auto& gt : frame_gts) {
      if (gt.box.class_id != cls) continue;
      care[g.size()] = !bucket || (gt.difficulty != Difficulty::kIgnored &&
                                   static_cast<int>(gt.difficulty) <= static_cast<int>(*bucket));
      g.push_back(gt.box);
    }
    std::vector<FullPoseBox> d;
    if (auto it = dets.find(frame); it != dets.end()) {
      for (const auto& b : it->second) {
        if (b.class_id == cls) d.push_back(b);
      }
    }
    const MatchResult m = match(d, g, criterion, std::span<const bool>(care.get(), g.size()));
    p.gt_count += m.gt_count;
    for (const auto& dm : m.detections) {
      if (dm.ignored) continue;
      p.outcomes.push_back({dm.score, dm.tp});
      p.matches.push_back(dm);
    }
  }
  return p;
}

}  // namespace

EvalReport evaluate(const FrameBoxes& dets, const FrameGts& gts, const EvalConfig& cfg) {
  cfg.validate();
  for (const auto& [frame, boxes] : dets) {
    if (!gts.contains(frame)) {
      throw Error(ErrorKind::kFrameMismatch, "detections for unknown frame '" + frame + "'");
    }
  }
  std::set<int> classes;
  for (const auto& [frame, frame_gts] : gts) {
    for (const auto& g : frame_gts) classes.insert(g.box.class_id);
  }

  EvalReport report;
  for (int cls : classes) {
    const std::string name = class_name(cls);
    for (Criterion c : cfg.criteria) {
      if (c == Criterion::kCenterDistance) {
        const MatchCriterion mc{c, cfg.cd_threshold, cfg.cd_bev};
        const Pooled p = pool_class(dets, gts, cls, mc, std::nullopt);
        RotatedSuite s;
        s.ap_cd = average_precision(p.outcomes, p.gt_count, cfg.recall_positions);
        const TpScores tps = tp_scores(p.matches, cfg.cd_threshold);
        s.ats = tps.ats;
        s.ass = tps.ass;
        s.aos = tps.aos;
        s.tp_defined = tps.defined;
        s.rods = rods(s.ap_cd, s.ats, s.ass, s.aos);
        report.rotated[cls] = s;
        for (const auto& [metric, value] : {std::pair{"AP", s.ap_cd}, std::pair{"ATS", s.ats},
                                            std::pair{"ASS", s.ass}, std::pair{"AOS", s.aos},
                                            std::pair{"RODS", s.rods}}) {
          report.rows.push_back({name, "all", criterion_name(c), metric, value});
        }
        continue;
      }
      const MatchCriterion mc{c, cfg.iou_threshold};
      for (Difficulty d : {Difficulty::kEasy, Difficulty::kModerate, Difficulty::kHard}) {
        const Pooled p = pool_class(dets, gts, cls, mc, d);
        if (p.gt_count == 0) continue;  // empty bucket: AP undefined
        report.rows.push_back({name, difficulty_name(d), criterion_name(c), "AP",
                               average_precision(p.outcomes, p.gt_count, cfg.recall_positions)});
      }
    }
  }
  return report;
}

void write_report_csv(std::ostream& os, const EvalReport& report) {
  os << "class,difficulty,criterion,metric,value\n";
  const auto old = os.precision(17);
  for (const auto& r : report.rows) {
    os << r.cls << ',' << r.difficulty << ',' << r.criterion << ',' << r.metric << ',' << r.value << '\n';
  }
  os.precision(old);
}

void write_report_table(std::ostream& os, const EvalReport& report) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::left << std::setw(15) << "class" << std::setw(12) << "difficulty" << std::setw(7)
     << "crit" << std::setw(7) << "metric" << std::right << std::setw(10) << "value %" << '\n';
  for (const auto& r : report.rows) {
    os << std::left << std::setw(15) << r.cls << std::setw(12) << r.difficulty << std::setw(7)
       << r.criterion << std::setw(7) << r.metric << std::right << std::setw(10) << std::fixed
       << std::setprecision(2) << r.value * 100.0 << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace det6d
