#pragma once

#include <span>

#include "det6d/codec.hpp"
#include "det6d/nn.hpp"

namespace det6d {

double sigmoid(double x);
/// d sigmoid / dx evaluated at x.
double sigmoid_grad(double x);
/// log(1 + e^x) without overflow.
double softplus(double x);

struct ScalarLoss {
  double value = 0.0;
  double grad = 0.0;
};

struct VectorLoss {
  double value = 0.0;
  nn::Vector grad;
};

ScalarLoss smooth_l1(double pred, double target, double beta = 1.0);

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

/// Focal loss on a probability p in (0,1); grad is d loss / d p.
ScalarLoss focal_loss(double p, int label, FocalParams params = {});
/// Same loss with p = sigmoid(logit); grad is d loss / d logit.
ScalarLoss focal_loss_logit(double logit, int label, FocalParams params = {});

VectorLoss cross_entropy(std::span<const double> logits, int label);

/// Raw per-center head predictions. Rows are centers.
struct HeadOutput {
  nn::Tensor2 class_logits;  // n x classes
  nn::Vector seg_logit;      // n, pre-sigmoid terrain score
  nn::Vector s_g;            // n, sigmoid(seg_logit)
  nn::Tensor2 yaw_logits;    // n x bins
  nn::Vector yaw_residual;   // n
  nn::Tensor2 tilt;          // n x 2 (normalized roll, pitch)
  nn::Tensor2 log_dims;      // n x 3
  nn::Tensor2 offset;        // n x 3

  Eigen::Index size() const { return class_logits.rows(); }
  static HeadOutput zeros(Eigen::Index n, Eigen::Index classes, Eigen::Index bins);
};

/// Unit by default; a hook for re-weighting individual terms.
struct LossWeights {
  double cls = 1.0;
  double seg = 1.0;
  double tilt = 1.0;
  double yaw_cls = 1.0;
  double yaw_reg = 1.0;
  double dim = 1.0;
  double posi = 1.0;
};

struct LossTerms {
  double cls = 0.0;
  double seg = 0.0;
  double tilt = 0.0;
  double yaw_cls = 0.0;
  double yaw_reg = 0.0;
  double dim = 0.0;
  double posi = 0.0;
  double total = 0.0;
};

struct BoxLoss {
  LossTerms terms;
  HeadOutput grad;  // gradient w.r.t. every raw field; s_g is unused
};

struct BoxLossOptions {
  LossWeights weights;
  FocalParams focal;
  double smooth_l1_beta = 1.0;
};

/// L_box = L_cls + L_dim + L_posi + L_theta_xy + L_theta_z.
///  - cross-entropy classification over all centers, divided by N_p
///  - focal terrain segmentation over foreground centers, divided by N_p
///  - smooth-L1 roll/pitch over sloped foreground centers, divided by N_s
///  - yaw bin cross-entropy + residual smooth-L1 over foreground, divided by N_p
///  - smooth-L1 log-dims and center offsets over foreground, divided by N_p
/// Everything is zero when N_p = 0; the tilt term is zero when N_s = 0.
BoxLoss composite_box_loss(const HeadOutput& out, const TargetSet& targets,
                           const BoxLossOptions& options = {});

}  // namespace det6d
