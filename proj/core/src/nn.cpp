#include "det6d/nn.hpp"

#include <cmath>
#include <string>

#include "det6d/error.hpp"
#include "det6d/losses.hpp"

namespace det6d::nn {

namespace {

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kShapeMismatch, what);
}

Tensor2 activate(const Tensor2& z, Activation a) {
  switch (a) {
    case Activation::kRelu: return z.cwiseMax(0.0);
    case Activation::kSigmoid: return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::kNone: break;
  }
  return z;
}

// dL/dz given dL/dout and the post-activation output.
Tensor2 activation_backward(const Tensor2& out, const Tensor2& dout, Activation a) {
  switch (a) {
    case Activation::kRelu:
      return dout.cwiseProduct(out.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    case Activation::kSigmoid:
      return dout.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix()));
    case Activation::kNone: break;
  }
  return dout;
}

}  // namespace

Eigen::Index MlpParams::in_width() const { return layers.empty() ? 0 : layers.front().in_width(); }

Eigen::Index MlpParams::out_width() const { return layers.empty() ? 0 : layers.back().out_width(); }

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

void MlpParams::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    require_shape(layers[i].bias.size() == layers[i].out_width(),
                  "layer " + std::to_string(i) + " bias does not match its output width");
    if (i > 0) {
      require_shape(layers[i].in_width() == layers[i - 1].out_width(),
                    "layer " + std::to_string(i) + " input does not chain");
    }
  }
}

MlpParams make_mlp(Eigen::Index in_width, std::span<const Eigen::Index> widths,
                   Activation hidden, Activation last, Rng& rng) {
  MlpParams p;
  Eigen::Index fan_in = in_width;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    DenseLayer layer;
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    layer.weights = Tensor2(widths[i], fan_in);
    for (Eigen::Index k = 0; k < layer.weights.size(); ++k) {
      layer.weights.data()[k] = gaussian(rng, scale);
    }
    layer.bias = Vector::Zero(widths[i]);
    layer.activation = i + 1 == widths.size() ? last : hidden;
    p.layers.push_back(std::move(layer));
    fan_in = widths[i];
  }
  return p;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& params) {
  MlpGrads g;
  for (const auto& l : params.layers) {
    g.weights.push_back(Tensor2::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

MlpGrads& MlpGrads::operator+=(const MlpGrads& other) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

MlpForward mlp_forward(const MlpParams& params, const Tensor2& x) {
  params.validate();
  require_shape(params.layers.empty() || x.cols() == params.in_width(),
                "input has " + std::to_string(x.cols()) + " columns, network expects " +
                    std::to_string(params.in_width()));
  MlpForward f;
  Tensor2 cur = x;
  for (const auto& layer : params.layers) {
    f.cache.inputs.push_back(cur);
    Tensor2 z = cur * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    cur = activate(z, layer.activation);
    f.cache.outputs.push_back(cur);
  }
  f.y = std::move(cur);
  return f;
}

MlpBackward mlp_backward(const MlpParams& params, const MlpCache& cache, const Tensor2& dy) {
  require_shape(cache.inputs.size() == params.layers.size(), "cache does not match network");
  MlpBackward b;
  b.grads = MlpGrads::zeros_like(params);
  Tensor2 grad = dy;
  for (std::size_t i = params.layers.size(); i-- > 0;) {
    const auto& layer = params.layers[i];
    require_shape(grad.rows() == cache.outputs[i].rows() && grad.cols() == cache.outputs[i].cols(),
                  "upstream gradient shape does not match layer " + std::to_string(i));
    const Tensor2 dz = activation_backward(cache.outputs[i], grad, layer.activation);
    b.grads.weights[i] = dz.transpose() * cache.inputs[i];
    b.grads.bias[i] = dz.colwise().sum().transpose();
    grad = dz * layer.weights;
  }
  b.dx = std::move(grad);
  return b;
}

void append_flat(const MlpParams& params, std::vector<double>& out) {
  for (const auto& l : params.layers) {
    out.insert(out.end(), l.weights.data(), l.weights.data() + l.weights.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
}

void append_flat(const MlpGrads& grads, std::vector<double>& out) {
  for (std::size_t i = 0; i < grads.weights.size(); ++i) {
    out.insert(out.end(), grads.weights[i].data(), grads.weights[i].data() + grads.weights[i].size());
    out.insert(out.end(), grads.bias[i].data(), grads.bias[i].data() + grads.bias[i].size());
  }
}

std::size_t load_flat(MlpParams& params, std::span<const double> flat, std::size_t offset) {
  for (auto& l : params.layers) {
    const auto nw = static_cast<std::size_t>(l.weights.size());
    const auto nb = static_cast<std::size_t>(l.bias.size());
    require_shape(offset + nw + nb <= flat.size(), "flat parameter vector too short");
    std::copy_n(flat.data() + offset, nw, l.weights.data());
    offset += nw;
    std::copy_n(flat.data() + offset, nb, l.bias.data());
    offset += nb;
  }
  return offset;
}

PointNetForward pointnet_aggregate(const MlpParams& h, const MlpParams& gamma,
                                   const Tensor2& group) {
  if (group.rows() < 1) throw Error(ErrorKind::kEmptyGroup, "cannot aggregate an empty group");
  PointNetForward out;
  MlpForward hf = mlp_forward(h, group);
  const Tensor2& hx = hf.y;
  Tensor2 pooled(1, hx.cols());
  out.cache.argmax.resize(static_cast<std::size_t>(hx.cols()));
  for (Eigen::Index c = 0; c < hx.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < hx.rows(); ++r) {
      if (hx(r, c) > hx(best, c)) best = r;
    }
    out.cache.argmax[static_cast<std::size_t>(c)] = best;
    pooled(0, c) = hx(best, c);
  }
  MlpForward gf = mlp_forward(gamma, pooled);
  out.feature = std::move(gf.y);
  out.cache.h_cache = std::move(hf.cache);
  out.cache.gamma_cache = std::move(gf.cache);
  out.cache.rows = group.rows();
  return out;
}

PointNetBackward pointnet_backward(const MlpParams& h, const MlpParams& gamma,
                                   const PointNetCache& cache, const Tensor2& df) {
  PointNetBackward out;
  MlpBackward gb = mlp_backward(gamma, cache.gamma_cache, df);
  const auto channels = static_cast<Eigen::Index>(cache.argmax.size());
  Tensor2 dh = Tensor2::Zero(cache.rows, channels);
  for (Eigen::Index c = 0; c < channels; ++c) {
    dh(cache.argmax[static_cast<std::size_t>(c)], c) = gb.dx(0, c);
  }
  MlpBackward hb = mlp_backward(h, cache.h_cache, dh);
  out.dgroup = std::move(hb.dx);
  out.h_grads = std::move(hb.grads);
  out.gamma_grads = std::move(gb.grads);
  return out;
}

}  // namespace det6d::nn
