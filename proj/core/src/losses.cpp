#include "det6d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "det6d/error.hpp"

namespace det6d {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

ScalarLoss smooth_l1(double pred, double target, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorKind::kInputOutOfRange, "smooth-L1 beta must be positive");
  const double d = pred - target;
  if (std::abs(d) < beta) return {0.5 * d * d / beta, d / beta};
  return {std::abs(d) - 0.5 * beta, d > 0.0 ? 1.0 : -1.0};
}

ScalarLoss focal_loss(double p, int label, FocalParams params) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::kProbabilityOutOfRange, "focal loss needs p in (0,1)");
  }
  if (label != 0 && label != 1) throw Error(ErrorKind::kLabelOutOfRange, "focal label must be 0 or 1");
  const double pt = label ? p : 1.0 - p;
  const double at = label ? params.alpha : 1.0 - params.alpha;
  const double m = std::pow(1.0 - pt, params.gamma);
  const double value = -at * m * std::log(pt);
  // d/dpt of -at (1-pt)^g log(pt)
  const double dm = params.gamma == 0.0 ? 0.0 : params.gamma * std::pow(1.0 - pt, params.gamma - 1.0);
  const double dpt = at * (dm * std::log(pt) - m / pt);
  return {value, label ? dpt : -dpt};
}

ScalarLoss focal_loss_logit(double logit, int label, FocalParams params) {
  if (label != 0 && label != 1) throw Error(ErrorKind::kLabelOutOfRange, "focal label must be 0 or 1");
  const double sign = label ? 1.0 : -1.0;
  const double log_pt = -softplus(-sign * logit);
  const double pt = std::exp(log_pt);
  const double one_minus = sigmoid(-sign * logit);
  const double at = label ? params.alpha : 1.0 - params.alpha;
  const double m = std::pow(one_minus, params.gamma);
  const double value = -at * m * log_pt;
  // dL/dpt * dpt/dlogit, with dpt/dlogit = sign * pt (1 - pt).
  const double grad = at * (params.gamma * m * pt * log_pt - m * one_minus) * sign;
  return {value, grad};
}

VectorLoss cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw Error(ErrorKind::kLabelOutOfRange,
                "label " + std::to_string(label) + " outside " + std::to_string(logits.size()) +
                    " classes");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  const double lse = mx + std::log(sum);
  VectorLoss out;
  out.value = lse - logits[static_cast<std::size_t>(label)];
  out.grad.resize(static_cast<Eigen::Index>(logits.size()));
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.grad[static_cast<Eigen::Index>(i)] = std::exp(logits[i] - lse);
  }
  out.grad[label] -= 1.0;
  return out;
}

HeadOutput HeadOutput::zeros(Eigen::Index n, Eigen::Index classes, Eigen::Index bins) {
  HeadOutput o;
  o.class_logits = nn::Tensor2::Zero(n, classes);
  o.seg_logit = nn::Vector::Zero(n);
  o.s_g = nn::Vector::Constant(n, 0.5);
  o.yaw_logits = nn::Tensor2::Zero(n, bins);
  o.yaw_residual = nn::Vector::Zero(n);
  o.tilt = nn::Tensor2::Zero(n, 2);
  o.log_dims = nn::Tensor2::Zero(n, 3);
  o.offset = nn::Tensor2::Zero(n, 3);
  return o;
}

BoxLoss composite_box_loss(const HeadOutput& out, const TargetSet& targets,
                           const BoxLossOptions& options) {
  const Eigen::Index n = out.size();
  const bool shapes_ok = static_cast<Eigen::Index>(targets.size()) == n &&
                         out.seg_logit.size() == n && out.yaw_logits.rows() == n &&
                         out.yaw_residual.size() == n && out.tilt.rows() == n &&
                         out.tilt.cols() == 2 && out.log_dims.rows() == n &&
                         out.log_dims.cols() == 3 && out.offset.rows() == n &&
                         out.offset.cols() == 3 &&
                         static_cast<Eigen::Index>(targets.foreground.size()) == n;
  if (!shapes_ok) throw Error(ErrorKind::kShapeMismatch, "head output and targets disagree");

  BoxLoss loss;
  loss.grad = HeadOutput::zeros(n, out.class_logits.cols(), out.yaw_logits.cols());
  const auto n_p = static_cast<double>(targets.foreground_count());
  const auto n_s = static_cast<double>(targets.sloped_count());
  if (n_p == 0.0) return loss;

  const LossWeights& w = options.weights;
  const double beta = options.smooth_l1_beta;
  LossTerms& t = loss.terms;
  HeadOutput& g = loss.grad;

  auto add_reg = [&](double pred, double target, double scale, double& term, double& grad) {
    const ScalarLoss l = smooth_l1(pred, target, beta);
    term += scale * l.value;
    grad += scale * l.grad;
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    const BoxTargets& tg = targets.targets[static_cast<std::size_t>(i)];
    const bool fg = targets.foreground[static_cast<std::size_t>(i)];

    const nn::Vector row = out.class_logits.row(i).transpose();
    const VectorLoss ce = cross_entropy({row.data(), static_cast<std::size_t>(row.size())},
                                        fg ? tg.class_label : 0);
    t.cls += w.cls * ce.value / n_p;
    g.class_logits.row(i) = (w.cls / n_p) * ce.grad.transpose();

    if (!fg) continue;

    const ScalarLoss seg = focal_loss_logit(out.seg_logit[i], tg.ground_label, options.focal);
    t.seg += w.seg * seg.value / n_p;
    g.seg_logit[i] = w.seg * seg.grad / n_p;

    if (tg.ground_label && tg.tilt_supervised) {
      add_reg(out.tilt(i, 0), tg.tilt_x, w.tilt / n_s, t.tilt, g.tilt(i, 0));
      add_reg(out.tilt(i, 1), tg.tilt_y, w.tilt / n_s, t.tilt, g.tilt(i, 1));
    }

    const nn::Vector yrow = out.yaw_logits.row(i).transpose();
    const VectorLoss yce =
        cross_entropy({yrow.data(), static_cast<std::size_t>(yrow.size())}, tg.yaw.bin);
    t.yaw_cls += w.yaw_cls * yce.value / n_p;
    g.yaw_logits.row(i) = (w.yaw_cls / n_p) * yce.grad.transpose();
    add_reg(out.yaw_residual[i], tg.yaw.residual, w.yaw_reg / n_p, t.yaw_reg, g.yaw_residual[i]);

    for (int k = 0; k < 3; ++k) {
      add_reg(out.log_dims(i, k), tg.log_dims[k], w.dim / n_p, t.dim, g.log_dims(i, k));
      add_reg(out.offset(i, k), tg.center_offset[k], w.posi / n_p, t.posi, g.offset(i, k));
    }
  }
  t.total = t.cls + t.seg + t.tilt + t.yaw_cls + t.yaw_reg + t.dim + t.posi;
  return loss;
}

}  // namespace det6d
