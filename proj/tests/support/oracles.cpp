#include "oracles.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "det6d/classes.hpp"

namespace oracle {

Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0,
       0, std::cos(a), -std::sin(a),
       0, std::sin(a), std::cos(a);
  return m;
}

Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a),
       0, 1, 0,
       -std::sin(a), 0, std::cos(a);
  return m;
}

Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0,
       std::sin(a), std::cos(a), 0,
       0, 0, 1;
  return m;
}

Mat3 euler_matrix(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

Mat3 rodrigues_matrix(const Vec3& v, double gamma) {
  Mat3 k;
  k << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return Mat3::Identity() + std::sin(gamma) * k + (1.0 - std::cos(gamma)) * k * k;
}

Vec3 rodrigues(const Vec3& v, double gamma, const Vec3& p, const Vec3& pivot) {
  const Vec3 d = p - pivot;
  const double c = std::cos(gamma), s = std::sin(gamma);
  return pivot + d * c + v.cross(d) * s + v * v.dot(d) * (1.0 - c);
}

Angles decompose(const Mat3& r) {
  return {std::atan2(r(2, 1), r(2, 2)), -std::asin(r(2, 0)), std::atan2(r(1, 0), r(0, 0))};
}

bool inside(const Vec3& p, const FullPoseBox& b) {
  const Mat3 r = euler_matrix(b.euler.roll, b.euler.pitch, b.euler.yaw);
  const Vec3 local = r.transpose() * (p - b.center);
  return std::abs(local.x()) <= b.dims.l / 2 && std::abs(local.y()) <= b.dims.w / 2 &&
         std::abs(local.z()) <= b.dims.h / 2;
}

std::vector<P2> footprint(const FullPoseBox& b) {
  const double c = std::cos(b.euler.yaw), s = std::sin(b.euler.yaw);
  const double hl = b.dims.l / 2, hw = b.dims.w / 2;
  std::vector<P2> out;
  for (auto [u, v] : {std::pair{hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}}) {
    out.push_back({b.center.x() + c * u - s * v, b.center.y() + s * u + c * v});
  }
  return out;
}

double polygon_area(const std::vector<P2>& poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const P2& p = poly[i];
    const P2& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return std::abs(a) / 2;
}

// Sutherland-Hodgman against each edge of a convex ccw clipper.
std::vector<P2> clip(const std::vector<P2>& subject, const std::vector<P2>& clipper) {
  std::vector<P2> out = subject;
  for (std::size_t e = 0; e < clipper.size() && !out.empty(); ++e) {
    const P2 a = clipper[e], b = clipper[(e + 1) % clipper.size()];
    auto side = [&](const P2& p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x); };
    std::vector<P2> in = std::move(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const P2 p = in[i], q = in[(i + 1) % in.size()];
      const double sp = side(p), sq = side(q);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        const double t = sp / (sp - sq);
        out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
  }
  return out;
}

double bev_iou(const FullPoseBox& a, const FullPoseBox& b) {
  const double inter = polygon_area(clip(footprint(a), footprint(b)));
  const double uni = a.dims.l * a.dims.w + b.dims.l * b.dims.w - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double iou3d(const FullPoseBox& a, const FullPoseBox& b) {
  const double area = polygon_area(clip(footprint(a), footprint(b)));
  const double zlo = std::max(a.center.z() - a.dims.h / 2, b.center.z() - b.dims.h / 2);
  const double zhi = std::min(a.center.z() + a.dims.h / 2, b.center.z() + b.dims.h / 2);
  const double inter = area * std::max(0.0, zhi - zlo);
  const double uni = a.dims.l * a.dims.w * a.dims.h + b.dims.l * b.dims.w * b.dims.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double monte_carlo_iou(const FullPoseBox& a, const FullPoseBox& b, std::size_t samples,
                       unsigned long long seed) {
  double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
  for (const FullPoseBox* box : {&a, &b}) {
    for (const P2& p : footprint(*box)) {
      lo[0] = std::min(lo[0], p.x), hi[0] = std::max(hi[0], p.x);
      lo[1] = std::min(lo[1], p.y), hi[1] = std::max(hi[1], p.y);
    }
    lo[2] = std::min(lo[2], box->center.z() - box->dims.h / 2);
    hi[2] = std::max(hi[2], box->center.z() + box->dims.h / 2);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo[0], hi[0]), uy(lo[1], hi[1]), uz(lo[2], hi[2]);
  // rotations hoisted out of the sampling loop
  auto tester = [](const FullPoseBox& box) {
    const Mat3 rt = euler_matrix(box.euler.roll, box.euler.pitch, box.euler.yaw).transpose();
    return [rt, box](const Vec3& p) {
      const Vec3 l = rt * (p - box.center);
      return std::abs(l.x()) <= box.dims.l / 2 && std::abs(l.y()) <= box.dims.w / 2 &&
             std::abs(l.z()) <= box.dims.h / 2;
    };
  };
  const auto in_a = tester(a), in_b = tester(b);
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec3 p(ux(rng), uy(rng), uz(rng));
    const bool ia = in_a(p), ib = in_b(p);
    both += ia && ib;
    either += ia || ib;
  }
  return either ? static_cast<double>(both) / static_cast<double>(either) : 0.0;
}

std::vector<std::size_t> fps(const std::vector<Vec3>& pts, std::size_t k,
                             const std::vector<double>& weights) {
  std::vector<std::size_t> chosen;
  if (k == 0 || pts.empty()) return chosen;
  chosen.push_back(0);
  std::vector<bool> taken(pts.size(), false);
  taken[0] = true;
  while (chosen.size() < k) {
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (taken[i]) continue;
      double d = 1e300;
      for (std::size_t j : chosen) {
        const double dx = pts[i].x() - pts[j].x(), dy = pts[i].y() - pts[j].y(),
                     dz = pts[i].z() - pts[j].z();
        d = std::min(d, dx * dx + dy * dy + dz * dz);
      }
      if (!weights.empty()) d *= weights[i];
      if (d > best) best = d, arg = i;
    }
    chosen.push_back(arg);
    taken[arg] = true;
  }
  return chosen;
}

std::vector<std::size_t> nms(const std::vector<FullPoseBox>& dets, double threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto i, auto j) { return *dets[i].score > *dets[j].score; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool keep = true;
    for (std::size_t j : kept) keep = keep && !(oracle::bev_iou(dets[i], dets[j]) > threshold);
    if (keep) kept.push_back(i);
  }
  return kept;
}

double average_precision(const std::vector<Outcome>& outcomes, std::size_t gt_count,
                         int positions) {
  if (gt_count == 0) return 0.0;
  std::set<double, std::greater<>> cutoffs;
  for (const auto& o : outcomes) cutoffs.insert(o.score);
  // (tp, predicted) at every distinct score cutoff
  std::vector<std::pair<std::size_t, std::size_t>> pr;
  for (double c : cutoffs) {
    std::size_t tp = 0, n = 0;
    for (const auto& o : outcomes) {
      if (o.score >= c) ++n, tp += o.tp;
    }
    pr.emplace_back(tp, n);
  }
  double sum = 0;
  for (int k = 0; k < positions; ++k) {
    // recall >= k/10 or (k+1)/40, compared in integers
    const std::size_t num = positions == 11 ? k : k + 1;
    const std::size_t den = positions == 11 ? 10 : 40;
    double best = 0;
    for (auto [tp, n] : pr) {
      if (tp * den >= num * gt_count) best = std::max(best, double(tp) / double(n));
    }
    sum += best;
  }
  return sum / positions;
}

double geodesic(const Mat3& a, const Mat3& b) {
  const Eigen::Quaterniond q(a.transpose() * b);
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

namespace {

struct Matched {
  bool tp = false;
  bool ignored = false;
  double score = 0;
  double dist = 0, siou = 0, rot = 0;
};

std::vector<Matched> greedy(std::vector<FullPoseBox> d, const std::vector<FullPoseBox>& g,
                            const std::vector<bool>& care, det6d::Criterion crit, double thr,
                            bool bev_dist) {
  std::stable_sort(d.begin(), d.end(),
                   [](const auto& x, const auto& y) { return *x.score > *y.score; });
  std::vector<bool> used(g.size(), false);
  std::vector<Matched> out;
  for (const auto& det : d) {
    Matched m;
    m.score = *det.score;
    int best = -1;
    double best_aff = -1e300;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (used[j]) continue;
      double aff;
      bool ok;
      if (crit == det6d::Criterion::kCenterDistance) {
        Vec3 diff = det.center - g[j].center;
        if (bev_dist) diff.z() = 0;
        aff = -diff.norm();
        ok = diff.norm() <= thr;
      } else {
        aff = crit == det6d::Criterion::kBev ? oracle::bev_iou(det, g[j]) : oracle::iou3d(det, g[j]);
        ok = aff >= thr;
      }
      if (ok && aff > best_aff) best_aff = aff, best = int(j);
    }
    if (best >= 0) {
      used[best] = true;
      const FullPoseBox& gt = g[best];
      if (!care[best]) {
        m.ignored = true;
      } else {
        m.tp = true;
        Vec3 diff = det.center - gt.center;
        if (bev_dist) diff.z() = 0;
        m.dist = diff.norm();
        const double inter = std::min(det.dims.l, gt.dims.l) * std::min(det.dims.w, gt.dims.w) *
                             std::min(det.dims.h, gt.dims.h);
        m.siou = inter / (det.dims.l * det.dims.w * det.dims.h + gt.dims.l * gt.dims.w * gt.dims.h -
                          inter);
        m.rot = geodesic(euler_matrix(det.euler.roll, det.euler.pitch, det.euler.yaw),
                         euler_matrix(gt.euler.roll, gt.euler.pitch, gt.euler.yaw));
      }
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace

std::map<Key, double> evaluate(const det6d::FrameBoxes& dets, const det6d::FrameGts& gts,
                               const det6d::EvalConfig& cfg) {
  using det6d::Criterion;
  using det6d::Difficulty;
  std::map<Key, double> out;
  std::set<int> classes;
  for (const auto& [f, gs] : gts)
    for (const auto& g : gs) classes.insert(g.box.class_id);

  for (int cls : classes) {
    const std::string name = det6d::class_name(cls);
    for (Criterion crit : cfg.criteria) {
      const bool cd = crit == Criterion::kCenterDistance;
      const std::string crit_name =
          cd ? "cd" : (crit == Criterion::kBev ? "bev" : "iou3d");
      std::vector<int> buckets = cd ? std::vector<int>{-1} : std::vector<int>{0, 1, 2};
      for (int bucket : buckets) {
        std::vector<Outcome> outcomes;
        std::vector<Matched> tps;
        std::size_t gt_count = 0;
        for (const auto& [frame, gs] : gts) {
          std::vector<FullPoseBox> g;
          std::vector<bool> care;
          for (const auto& x : gs) {
            if (x.box.class_id != cls) continue;
            g.push_back(x.box);
            care.push_back(bucket < 0 || (x.difficulty != Difficulty::kIgnored &&
                                          static_cast<int>(x.difficulty) <= bucket));
            gt_count += care.back();
          }
          std::vector<FullPoseBox> d;
          if (auto it = dets.find(frame); it != dets.end())
            for (const auto& x : it->second)
              if (x.class_id == cls) d.push_back(x);
          const double thr = cd ? cfg.cd_threshold : cfg.iou_threshold;
          for (const Matched& m : greedy(d, g, care, crit, thr, cd && cfg.cd_bev)) {
            if (m.ignored) continue;
            outcomes.push_back({m.score, m.tp});
            if (m.tp) tps.push_back(m);
          }
        }
        if (!cd) {
          if (gt_count == 0) continue;
          static const char* names[] = {"easy", "moderate", "hard"};
          out[{name, names[bucket], crit_name, "AP"}] =
              average_precision(outcomes, gt_count, cfg.recall_positions);
          continue;
        }
        const double ap = average_precision(outcomes, gt_count, cfg.recall_positions);
        double ats = 0, ass = 0, aos = 0;
        for (const auto& m : tps) {
          ats += std::max(0.0, 1.0 - m.dist / cfg.cd_threshold);
          ass += m.siou;
          aos += 1.0 - m.rot / M_PI;
        }
        if (!tps.empty()) {
          ats /= double(tps.size()), ass /= double(tps.size()), aos /= double(tps.size());
        }
        out[{name, "all", "cd", "AP"}] = ap;
        out[{name, "all", "cd", "ATS"}] = ats;
        out[{name, "all", "cd", "ASS"}] = ass;
        out[{name, "all", "cd", "AOS"}] = aos;
        out[{name, "all", "cd", "RODS"}] = (3 * ap + ats + ass + aos) / 6;
      }
    }
  }
  return out;
}

PlyData read_ply(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  PlyData d;
  std::getline(is, line);
  if (line != "ply") throw std::runtime_error("not a ply file");
  while (std::getline(is, line) && line != "end_header") {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "element") {
      std::string what;
      ls >> what >> d.vertices;
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      d.properties.push_back(name);
    } else if (tok == "format") {
      std::string f;
      ls >> f;
      if (f != "ascii") throw std::runtime_error("expected ascii");
    }
  }
  const bool color = d.properties.size() == 6;
  for (std::size_t i = 0; i < d.vertices; ++i) {
    std::array<double, 3> p{};
    is >> p[0] >> p[1] >> p[2];
    d.xyz.push_back(p);
    if (color) {
      std::array<int, 3> c{};
      is >> c[0] >> c[1] >> c[2];
      d.rgb.push_back(c);
    }
  }
  if (!is) throw std::runtime_error("short vertex list");
  return d;
}

}  // namespace oracle
