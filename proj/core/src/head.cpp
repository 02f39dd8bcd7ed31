#include "det6d/head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "det6d/error.hpp"
#include "det6d/optim.hpp"

namespace det6d {

using nn::Activation;
using nn::MlpParams;
using nn::Tensor2;
using nn::Vector;

void HeadConfig::validate() const {
  codec.validate();
  if (feature_dim <= 0 || class_count < 2) {
    throw Error(ErrorKind::kInvalidConfig, "head needs positive feature width and >= 2 classes");
  }
  for (auto w : shared_widths) {
    if (w <= 0) throw Error(ErrorKind::kInvalidConfig, "shared widths must be positive");
  }
  for (auto w : seg_widths) {
    if (w <= 0) throw Error(ErrorKind::kInvalidConfig, "segmentation widths must be positive");
  }
}

std::vector<MlpParams> HeadParams::to_list() const {
  return {seg, shared, cls, yaw_bin, yaw_residual, tilt, dims, offset};
}

HeadParams HeadParams::from_list(std::vector<MlpParams> mlps) {
  if (mlps.size() != kMlpCount) {
    throw Error(ErrorKind::kShapeMismatch, "head container must hold 8 networks");
  }
  HeadParams p;
  p.seg = std::move(mlps[0]);
  p.shared = std::move(mlps[1]);
  p.cls = std::move(mlps[2]);
  p.yaw_bin = std::move(mlps[3]);
  p.yaw_residual = std::move(mlps[4]);
  p.tilt = std::move(mlps[5]);
  p.dims = std::move(mlps[6]);
  p.offset = std::move(mlps[7]);
  return p;
}

Vector HeadParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& m : to_list()) nn::append_flat(m, flat);
  return Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

void HeadParams::unflatten(const Vector& flat) {
  std::span<const double> s(flat.data(), static_cast<std::size_t>(flat.size()));
  std::size_t off = 0;
  for (MlpParams* m : {&seg, &shared, &cls, &yaw_bin, &yaw_residual, &tilt, &dims, &offset}) {
    off = nn::load_flat(*m, s, off);
  }
  if (off != s.size()) throw Error(ErrorKind::kShapeMismatch, "flat head parameters too long");
}

std::size_t HeadParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& m : to_list()) n += m.parameter_count();
  return n;
}

HeadParams init_head(const HeadConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  HeadParams p;
  std::vector<Eigen::Index> seg_widths = cfg.seg_widths;
  seg_widths.push_back(1);
  p.seg = nn::make_mlp(cfg.feature_dim, seg_widths, Activation::kRelu, Activation::kNone, rng);
  p.shared = nn::make_mlp(cfg.feature_dim, cfg.shared_widths, Activation::kRelu, Activation::kRelu, rng);
  const Eigen::Index trunk = cfg.shared_widths.empty() ? cfg.feature_dim : cfg.shared_widths.back();
  auto branch = [&](Eigen::Index out) {
    const std::array<Eigen::Index, 1> w{out};
    MlpParams m = nn::make_mlp(trunk, w, Activation::kNone, Activation::kNone, rng);
    // Small output layers keep the initial regression values near zero.
    m.layers.front().weights *= 0.1;
    return m;
  };
  p.cls = branch(cfg.class_count);
  p.yaw_bin = branch(cfg.codec.n_yaw_bins);
  p.yaw_residual = branch(1);
  p.tilt = branch(2);
  p.dims = branch(3);
  p.offset = branch(3);
  return p;
}

HeadForward head_forward_cached(const HeadParams& params, const Tensor2& features) {
  HeadForward f;
  auto seg = nn::mlp_forward(params.seg, features);
  auto trunk = nn::mlp_forward(params.shared, features);
  auto run = [&](const MlpParams& m, nn::MlpCache& cache) {
    auto r = nn::mlp_forward(m, trunk.y);
    cache = std::move(r.cache);
    return std::move(r.y);
  };
  HeadOutput& o = f.out;
  o.seg_logit = seg.y.col(0);
  o.s_g = o.seg_logit.unaryExpr([](double z) { return sigmoid(z); });
  o.class_logits = run(params.cls, f.cache.cls);
  o.yaw_logits = run(params.yaw_bin, f.cache.yaw_bin);
  o.yaw_residual = run(params.yaw_residual, f.cache.yaw_residual).col(0);
  o.tilt = run(params.tilt, f.cache.tilt);
  o.log_dims = run(params.dims, f.cache.dims);
  o.offset = run(params.offset, f.cache.offset);
  f.cache.seg = std::move(seg.cache);
  f.cache.shared = std::move(trunk.cache);
  return f;
}

std::vector<FullPoseBox> head_decode(const HeadOutput& out, const PointCloud& centers,
                                     const CodecConfig& cfg) {
  if (static_cast<Eigen::Index>(centers.size()) != out.size()) {
    throw Error(ErrorKind::kShapeMismatch, "centers and head output differ in length");
  }
  std::vector<FullPoseBox> boxes;
  boxes.reserve(centers.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    FullPoseBox b;
    Eigen::Index cls = 0;
    const double mx = out.class_logits.row(i).maxCoeff(&cls);
    const double denom = (out.class_logits.row(i).array() - mx).exp().sum();
    b.class_id = static_cast<int>(cls);
    b.score = 1.0 / denom;

    Eigen::Index bin = 0;
    out.yaw_logits.row(i).maxCoeff(&bin);
    b.euler.yaw = decode_yaw({static_cast<int>(bin), out.yaw_residual[i]}, cfg);
    const double s_g = out.s_g[i];
    b.euler.roll = gate_tilt(s_g, decode_tilt(out.tilt(i, 0), cfg.t_theta_x, cfg.tilt_mode));
    b.euler.pitch = gate_tilt(s_g, decode_tilt(out.tilt(i, 1), cfg.t_theta_y, cfg.tilt_mode));

    b.dims = decode_dims(out.log_dims.row(i).transpose());
    b.center = decode_center_offset(centers.points[static_cast<std::size_t>(i)],
                                    out.offset.row(i).transpose());
    boxes.push_back(b);
  }
  return boxes;
}

HeadLoss head_loss(const HeadParams& params, const Tensor2& features, const TargetSet& targets,
                   const BoxLossOptions& options) {
  const HeadForward f = head_forward_cached(params, features);
  const BoxLoss loss = composite_box_loss(f.out, targets, options);
  const HeadOutput& g = loss.grad;

  Tensor2 dtrunk = Tensor2::Zero(features.rows(), params.cls.in_width());
  auto branch = [&](const MlpParams& m, const nn::MlpCache& cache, const Tensor2& dy) {
    auto b = nn::mlp_backward(m, cache, dy);
    dtrunk += b.dx;
    return std::move(b.grads);
  };
  const Tensor2 dyaw_res = g.yaw_residual;
  const Tensor2 dseg = g.seg_logit;

  std::vector<nn::MlpGrads> grads(HeadParams::kMlpCount);
  grads[2] = branch(params.cls, f.cache.cls, g.class_logits);
  grads[3] = branch(params.yaw_bin, f.cache.yaw_bin, g.yaw_logits);
  grads[4] = branch(params.yaw_residual, f.cache.yaw_residual, dyaw_res);
  grads[5] = branch(params.tilt, f.cache.tilt, g.tilt);
  grads[6] = branch(params.dims, f.cache.dims, g.log_dims);
  grads[7] = branch(params.offset, f.cache.offset, g.offset);
  grads[1] = nn::mlp_backward(params.shared, f.cache.shared, dtrunk).grads;
  grads[0] = nn::mlp_backward(params.seg, f.cache.seg, dseg).grads;

  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  for (const auto& gr : grads) nn::append_flat(gr, flat);

  HeadLoss out;
  out.terms = loss.terms;
  out.grads = Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
  return out;
}

namespace {

struct Pool {
  PointCloud centers;
  Tensor2 features;
  TargetSet targets;
};

Pool concatenate(std::span<const ToySample> dataset, Eigen::Index feature_dim) {
  Pool pool;
  Eigen::Index rows = 0;
  for (const auto& s : dataset) rows += s.features.rows();
  pool.features.resize(rows, feature_dim);
  Eigen::Index r = 0;
  for (const auto& s : dataset) {
    if (s.features.cols() != feature_dim ||
        static_cast<std::size_t>(s.features.rows()) != s.targets.size()) {
      throw Error(ErrorKind::kShapeMismatch, "sample features do not match the head config");
    }
    pool.features.middleRows(r, s.features.rows()) = s.features;
    r += s.features.rows();
    pool.targets.targets.insert(pool.targets.targets.end(), s.targets.targets.begin(),
                                s.targets.targets.end());
    pool.targets.foreground.insert(pool.targets.foreground.end(), s.targets.foreground.begin(),
                                   s.targets.foreground.end());
    pool.targets.box_index.insert(pool.targets.box_index.end(), s.targets.box_index.begin(),
                                  s.targets.box_index.end());
  }
  return pool;
}

void accumulate(LossTerms& acc, const LossTerms& t, double w) {
  acc.cls += w * t.cls;
  acc.seg += w * t.seg;
  acc.tilt += w * t.tilt;
  acc.yaw_cls += w * t.yaw_cls;
  acc.yaw_reg += w * t.yaw_reg;
  acc.dim += w * t.dim;
  acc.posi += w * t.posi;
  acc.total += w * t.total;
}

}  // namespace

TrainResult train_toy(std::span<const ToySample> dataset, const TrainConfig& cfg,
                      const std::optional<HeadParams>& init) {
  if (dataset.empty()) throw Error(ErrorKind::kEmptyDataset, "training needs at least one sample");
  cfg.head.validate();
  const Pool pool = concatenate(dataset, cfg.head.feature_dim);
  const auto n = static_cast<std::size_t>(pool.features.rows());
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "training samples hold no centers");

  TrainResult result;
  result.params = init ? *init : init_head(cfg.head, cfg.seed);
  Vector flat = result.params.flatten();
  nn::AdamState state;
  const nn::AdamOptions adam{.lr = cfg.lr};
  Rng rng(cfg.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);

  HeadParams work = result.params;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog entry{.epoch = epoch + 1, .terms = {}};
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const auto rows = static_cast<Eigen::Index>(stop - start);
      Tensor2 x(rows, pool.features.cols());
      TargetSet t;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        x.row(static_cast<Eigen::Index>(k - start)) = pool.features.row(static_cast<Eigen::Index>(i));
        t.targets.push_back(pool.targets.targets[i]);
        t.foreground.push_back(pool.targets.foreground[i]);
        t.box_index.push_back(pool.targets.box_index[i]);
      }
      work.unflatten(flat);
      const HeadLoss loss = head_loss(work, x, t, cfg.loss);
      accumulate(entry.terms, loss.terms, static_cast<double>(rows) / static_cast<double>(n));
      nn::adam_step(flat, loss.grads, state, adam);
    }
    result.log.push_back(entry);
  }
  result.params.unflatten(flat);
  return result;
}

void write_training_log(std::ostream& os, std::span<const EpochLog> log) {
  os << "epoch,total,cls,seg,tilt,yaw_cls,yaw_reg,dim,posi\n";
  const auto old = os.precision(17);
  for (const auto& e : log) {
    const LossTerms& t = e.terms;
    os << e.epoch << ',' << t.total << ',' << t.cls << ',' << t.seg << ',' << t.tilt << ','
       << t.yaw_cls << ',' << t.yaw_reg << ',' << t.dim << ',' << t.posi << '\n';
  }
  os.precision(old);
}

HeadMetrics evaluate_head(const HeadParams& params, std::span<const ToySample> dataset,
                          const CodecConfig& codec) {
  HeadMetrics m;
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0, total = 0;
  double roll_err = 0.0, pitch_err = 0.0;
  for (const auto& sample : dataset) {
    const HeadOutput out = head_forward(params, sample.features);
    const std::vector<FullPoseBox> boxes = head_decode(out, sample.centers, codec);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const BoxTargets& t = sample.targets.targets[i];
      const bool fg = sample.targets.foreground[i];
      const auto row = static_cast<Eigen::Index>(i);
      ++total;
      if (boxes[i].class_id == (fg ? t.class_label : 0)) ++correct;
      if (out.s_g[row] <= 0.5) {
        ++m.gated_flat;
        if (boxes[i].euler.roll != 0.0 || boxes[i].euler.pitch != 0.0) ++m.gated_nonzero;
      }
      if (!fg) continue;
      ++m.foreground;
      const bool pred = out.s_g[row] > 0.5;
      const bool truth = t.ground_label == 1;
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
      if (truth) {
        const FullPoseBox& gt = sample.boxes[static_cast<std::size_t>(sample.targets.box_index[i])];
        ++m.sloped;
        roll_err += std::abs(boxes[i].euler.roll - gt.euler.roll);
        pitch_err += std::abs(boxes[i].euler.pitch - gt.euler.pitch);
      }
    }
  }
  m.seg_f1 = tp == 0 ? (fp == 0 && fn == 0 ? 1.0 : 0.0)
                     : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  if (m.sloped > 0) {
    m.roll_mae_deg = rad_to_deg(roll_err / static_cast<double>(m.sloped));
    m.pitch_mae_deg = rad_to_deg(pitch_err / static_cast<double>(m.sloped));
  }
  m.class_accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  return m;
}

}  // namespace det6d
