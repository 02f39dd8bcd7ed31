#include "det6d/verification.hpp"

#include <algorithm>
#include <functional>

#include "det6d/codec.hpp"
#include "det6d/head.hpp"
#include "det6d/losses.hpp"
#include "det6d/nn.hpp"
#include "det6d/optim.hpp"
#include "det6d/random.hpp"

namespace det6d {
namespace {

using nn::Tensor2;
using nn::Vector;

Vector random_vector(Eigen::Index n, double lo, double hi, Rng& rng) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

Tensor2 random_tensor(Eigen::Index r, Eigen::Index c, double lo, double hi, Rng& rng) {
  Tensor2 t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = uniform(rng, lo, hi);
  return t;
}

// Entries with magnitude in [lo, hi] and random sign.
Tensor2 signed_tensor(Eigen::Index r, Eigen::Index c, double lo, double hi, Rng& rng) {
  Tensor2 t = random_tensor(r, c, lo, hi, rng);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (rng() & 1) t.data()[i] = -t.data()[i];
  }
  return t;
}

// make_mlp zeroes biases, which puts ReLU units fed by dead rows exactly
// on the kink. Random biases move them off it.
void randomize_bias(nn::MlpParams& m, Rng& rng) {
  for (auto& l : m.layers) {
    const Tensor2 b = signed_tensor(l.bias.size(), 1, 0.1, 0.5, rng);
    l.bias = Eigen::Map<const Vector>(b.data(), b.size());
  }
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Packs an MLP's parameters followed by an input tensor.
Vector pack(std::initializer_list<const nn::MlpParams*> mlps, const Tensor2* x) {
  std::vector<double> flat;
  for (const auto* m : mlps) nn::append_flat(*m, flat);
  if (x) flat.insert(flat.end(), x->data(), x->data() + x->size());
  return to_vector(flat);
}

std::size_t unpack(std::initializer_list<nn::MlpParams*> mlps, Tensor2* x, const Vector& v) {
  std::span<const double> s(v.data(), static_cast<std::size_t>(v.size()));
  std::size_t off = 0;
  for (auto* m : mlps) off = nn::load_flat(*m, s, off);
  if (x) {
    std::copy_n(v.data() + off, x->size(), x->data());
    off += static_cast<std::size_t>(x->size());
  }
  return off;
}

// Central differences at eps = 1e-6 carry roughly 1e-10 * max(1, |f|) of
// absolute roundoff (more when intermediates are larger than f), so a
// coordinate below `resolution` times that scale cannot be resolved to 1e-6
// relative error. Points with such coordinates are redrawn; exact zeros are
// kept since both sides agree.
constexpr int kMaxDraws = 10000;

bool resolvable(const nn::DifferentiableFn& f, const Vector& x, double resolution) {
  Vector g;
  const double scale = std::max(1.0, std::abs(f(x, &g)));
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (g[i] != 0.0 && std::abs(g[i]) < resolution * scale) return false;
  }
  return true;
}

// Returns true once the point has been checked, false when it was redrawn.
bool check_point(GradCheckEntry& e, const nn::DifferentiableFn& f, const Vector& x, double eps,
                 double resolution = 1e-3) {
  if (!resolvable(f, x, resolution) && e.redrawn < kMaxDraws) {
    ++e.redrawn;
    return false;
  }
  const nn::GradCheckResult r = nn::grad_check(f, x, eps);
  if (r.max_rel_error >= e.max_rel_error) {
    e.max_rel_error = r.max_rel_error;
    e.worst_analytic = r.worst_analytic;
    e.worst_numeric = r.worst_numeric;
  }
  e.checked += r.checked;
  ++e.points;
  return true;
}

GradCheckEntry check_mlp(const char* name, nn::Activation last, Rng& rng, int points, double eps) {
  GradCheckEntry e{name};
  while (e.points < points) {
    const std::vector<Eigen::Index> widths{6, 5, 3};
    nn::MlpParams net = make_mlp(4, widths, nn::Activation::kRelu, last, rng);
    randomize_bias(net, rng);
    Tensor2 x = signed_tensor(3, 4, 0.5, 1.5, rng);
    const Tensor2 c = signed_tensor(3, 3, 0.5, 1.5, rng);
    nn::DifferentiableFn f = [&](const Vector& v, Vector* grad) {
      nn::MlpParams m = net;
      Tensor2 in = x;
      unpack({&m}, &in, v);
      const auto fwd = nn::mlp_forward(m, in);
      if (grad) {
        const auto back = nn::mlp_backward(m, fwd.cache, c);
        std::vector<double> flat;
        nn::append_flat(back.grads, flat);
        flat.insert(flat.end(), back.dx.data(), back.dx.data() + back.dx.size());
        *grad = to_vector(flat);
      }
      return fwd.y.cwiseProduct(c).sum();
    };
    check_point(e, f, pack({&net}, &x), eps);
  }
  return e;
}

GradCheckEntry check_pointnet(Rng& rng, int points, double eps) {
  GradCheckEntry e{"pointnet_aggregate"};
  while (e.points < points) {
    const std::vector<Eigen::Index> hw{6, 4}, gw{4, 3};
    nn::MlpParams h = make_mlp(3, hw, nn::Activation::kRelu, nn::Activation::kNone, rng);
    nn::MlpParams g = make_mlp(4, gw, nn::Activation::kRelu, nn::Activation::kNone, rng);
    randomize_bias(h, rng);
    randomize_bias(g, rng);
    Tensor2 group = signed_tensor(4, 3, 0.5, 1.5, rng);
    const Tensor2 c = signed_tensor(1, 3, 0.5, 1.5, rng);
    nn::DifferentiableFn f = [&](const Vector& v, Vector* grad) {
      nn::MlpParams hh = h, gg = g;
      Tensor2 in = group;
      unpack({&hh, &gg}, &in, v);
      const auto fwd = nn::pointnet_aggregate(hh, gg, in);
      if (grad) {
        const auto back = nn::pointnet_backward(hh, gg, fwd.cache, c);
        std::vector<double> flat;
        nn::append_flat(back.h_grads, flat);
        nn::append_flat(back.gamma_grads, flat);
        flat.insert(flat.end(), back.dgroup.data(), back.dgroup.data() + back.dgroup.size());
        *grad = to_vector(flat);
      }
      return fwd.feature.cwiseProduct(c).sum();
    };
    check_point(e, f, pack({&h, &g}, &group), eps);
  }
  return e;
}

// Scalar maps are checked one input at a time.
GradCheckEntry check_scalar(const char* name, const std::function<ScalarLoss(double, int)>& loss,
                            double lo, double hi, Rng& rng, int points, double eps) {
  GradCheckEntry e{name};
  while (e.points < points) {
    const int label = e.points % 2;
    Vector x(1);
    x[0] = uniform(rng, lo, hi);
    nn::DifferentiableFn f = [&](const Vector& v, Vector* grad) {
      const ScalarLoss l = loss(v[0], label);
      if (grad) *grad = Vector::Constant(1, l.grad);
      return l.value;
    };
    check_point(e, f, x, eps);
  }
  return e;
}

GradCheckEntry check_cross_entropy(Rng& rng, int points, double eps) {
  GradCheckEntry e{"cross_entropy"};
  while (e.points < points) {
    const Vector x = random_vector(5, -3.0, 3.0, rng);
    const int label = static_cast<int>(rng() % 5);
    nn::DifferentiableFn f = [&](const Vector& v, Vector* grad) {
      const VectorLoss l = cross_entropy({v.data(), static_cast<std::size_t>(v.size())}, label);
      if (grad) *grad = l.grad;
      return l.value;
    };
    check_point(e, f, x, eps);
  }
  return e;
}

// Random targets with foreground, sloped and flat centers all present.
TargetSet random_targets(std::size_t n, int classes, int bins, Rng& rng) {
  TargetSet t;
  for (std::size_t i = 0; i < n; ++i) {
    BoxTargets b;
    const bool fg = i % 4 != 3;
    b.class_label = fg ? 1 + static_cast<int>(rng() % static_cast<unsigned>(classes - 1)) : 0;
    b.ground_label = fg && i % 2 == 0 ? 1 : 0;
    b.tilt_supervised = b.ground_label == 1;
    b.tilt_x = uniform(rng, -1.0, 1.0);
    b.tilt_y = uniform(rng, -1.0, 1.0);
    b.yaw.bin = static_cast<int>(rng() % static_cast<unsigned>(bins));
    b.yaw.residual = uniform(rng, 0.5, 1.5);
    for (int k = 0; k < 3; ++k) {
      b.log_dims[k] = uniform(rng, -0.5, 1.5);
      b.center_offset[k] = uniform(rng, -1.0, 1.0);
    }
    t.targets.push_back(b);
    t.foreground.push_back(fg);
    t.box_index.push_back(fg ? static_cast<int>(i) : -1);
  }
  return t;
}

// Raw outputs flattened field by field; s_g is derived and not a variable.
std::vector<Tensor2*> fields(HeadOutput& o) {
  return {&o.class_logits, &o.yaw_logits, &o.tilt, &o.log_dims, &o.offset};
}

Vector flatten_output(const HeadOutput& o) {
  HeadOutput copy = o;
  std::vector<double> flat(copy.seg_logit.data(), copy.seg_logit.data() + copy.seg_logit.size());
  flat.insert(flat.end(), copy.yaw_residual.data(), copy.yaw_residual.data() + copy.yaw_residual.size());
  for (Tensor2* t : fields(copy)) flat.insert(flat.end(), t->data(), t->data() + t->size());
  return to_vector(flat);
}

void unflatten_output(HeadOutput& o, const Vector& v) {
  const double* p = v.data();
  std::copy_n(p, o.seg_logit.size(), o.seg_logit.data());
  p += o.seg_logit.size();
  std::copy_n(p, o.yaw_residual.size(), o.yaw_residual.data());
  p += o.yaw_residual.size();
  for (Tensor2* t : fields(o)) {
    std::copy_n(p, t->size(), t->data());
    p += t->size();
  }
  for (Eigen::Index i = 0; i < o.seg_logit.size(); ++i) o.s_g[i] = sigmoid(o.seg_logit[i]);
}

GradCheckEntry check_composite(Rng& rng, int points, double eps) {
  GradCheckEntry e{"composite_box_loss"};
  const int classes = 3, bins = 4;
  const Eigen::Index n = 8;
  while (e.points < points) {
    const TargetSet targets = random_targets(n, classes, bins, rng);
    HeadOutput out = HeadOutput::zeros(n, classes, bins);
    const Vector x0 = random_vector(flatten_output(out).size(), -2.0, 2.0, rng);
    nn::DifferentiableFn f = [&](const Vector& v, Vector* grad) {
      HeadOutput o = out;
      unflatten_output(o, v);
      const BoxLoss l = composite_box_loss(o, targets);
      if (grad) *grad = flatten_output(l.grad);
      return l.terms.total;
    };
    check_point(e, f, x0, eps, 3e-4);
  }
  return e;
}

GradCheckEntry check_head_loss(Rng& rng, int points, double eps) {
  GradCheckEntry e{"head_loss"};
  HeadConfig cfg;
  cfg.feature_dim = 4;
  cfg.shared_widths = {5};
  cfg.seg_widths = {3};
  cfg.class_count = 3;
  cfg.codec.n_yaw_bins = 3;
  const Eigen::Index n = 6;
  while (e.points < points) {
    HeadParams params = init_head(cfg, rng());
    // Branch layers start small; rescale so every coordinate carries a
    // gradient well above finite-difference roundoff.
    Vector theta = params.flatten();
    theta += random_vector(theta.size(), -0.3, 0.3, rng);
    const Tensor2 features = random_tensor(n, cfg.feature_dim, -1.0, 1.0, rng);
    const TargetSet targets = random_targets(n, cfg.class_count, cfg.codec.n_yaw_bins, rng);
    nn::DifferentiableFn f = [&](const Vector& v, Vector* grad) {
      HeadParams hp = params;
      hp.unflatten(v);
      const HeadLoss l = head_loss(hp, features, targets);
      if (grad) *grad = l.grads;
      return l.terms.total;
    };
    check_point(e, f, theta, eps, 3e-4);
  }
  return e;
}

}  // namespace

std::vector<GradCheckEntry> run_gradient_suite(std::uint64_t seed, int points, double epsilon) {
  Rng rng(seed);
  std::vector<GradCheckEntry> out;
  out.push_back(check_mlp("mlp_relu_linear", nn::Activation::kNone, rng, points, epsilon));
  out.push_back(check_mlp("mlp_relu_sigmoid", nn::Activation::kSigmoid, rng, points, epsilon));
  out.push_back(check_pointnet(rng, points, epsilon));
  out.push_back(check_scalar(
      "sigmoid", [](double x, int) { return ScalarLoss{sigmoid(x), sigmoid_grad(x)}; }, -6.0, 6.0,
      rng, points, epsilon));
  out.push_back(check_scalar(
      "smooth_l1", [](double x, int) { return smooth_l1(x, 0.0, 1.0); }, -3.0, 3.0, rng, points,
      epsilon));
  out.push_back(check_scalar(
      "focal_loss", [](double x, int y) { return focal_loss(x, y); }, 0.05, 0.95, rng, points,
      epsilon));
  out.push_back(check_scalar(
      "focal_loss_logit", [](double x, int y) { return focal_loss_logit(x, y); }, -4.0, 4.0, rng,
      points, epsilon));
  out.push_back(check_cross_entropy(rng, points, epsilon));
  out.push_back(check_composite(rng, points, epsilon));
  out.push_back(check_head_loss(rng, points, epsilon));
  return out;
}

}  // namespace det6d
