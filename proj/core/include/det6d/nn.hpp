#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "det6d/random.hpp"

namespace det6d::nn {

/// Row-major dense matrix; rows are samples.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { kNone = 0, kRelu = 1, kSigmoid = 2 };

struct DenseLayer {
  Tensor2 weights;  // out x in
  Vector bias;      // out
  Activation activation = Activation::kNone;

  Eigen::Index in_width() const { return weights.cols(); }
  Eigen::Index out_width() const { return weights.rows(); }
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  Eigen::Index in_width() const;
  Eigen::Index out_width() const;
  std::size_t parameter_count() const;
  void validate() const;
};

/// He-initialized stack: `hidden` activation on every layer but the last.
MlpParams make_mlp(Eigen::Index in_width, std::span<const Eigen::Index> widths,
                   Activation hidden, Activation last, Rng& rng);

struct MlpCache {
  std::vector<Tensor2> inputs;   // input of each layer
  std::vector<Tensor2> outputs;  // post-activation output of each layer
};

struct MlpForward {
  Tensor2 y;
  MlpCache cache;
};

struct MlpGrads {
  std::vector<Tensor2> weights;
  std::vector<Vector> bias;

  static MlpGrads zeros_like(const MlpParams& params);
  MlpGrads& operator+=(const MlpGrads& other);
};

struct MlpBackward {
  Tensor2 dx;
  MlpGrads grads;
};

MlpForward mlp_forward(const MlpParams& params, const Tensor2& x);
MlpBackward mlp_backward(const MlpParams& params, const MlpCache& cache, const Tensor2& dy);

/// Flattened parameter views (layer by layer: weights row-major, then bias).
void append_flat(const MlpParams& params, std::vector<double>& out);
void append_flat(const MlpGrads& grads, std::vector<double>& out);
std::size_t load_flat(MlpParams& params, std::span<const double> flat, std::size_t offset);

struct PointNetCache {
  MlpCache h_cache;
  MlpCache gamma_cache;
  std::vector<Eigen::Index> argmax;  // winning row per channel
  Eigen::Index rows = 0;
};

struct PointNetForward {
  Tensor2 feature;  // 1 x out
  PointNetCache cache;
};

struct PointNetBackward {
  Tensor2 dgroup;
  MlpGrads h_grads;
  MlpGrads gamma_grads;
};

/// f = gamma(max_i h(x_i)) with a channel-wise max over the group rows.
/// Ties in the max go to the lowest row index.
PointNetForward pointnet_aggregate(const MlpParams& h, const MlpParams& gamma,
                                   const Tensor2& group);
PointNetBackward pointnet_backward(const MlpParams& h, const MlpParams& gamma,
                                   const PointNetCache& cache, const Tensor2& df);

}  // namespace det6d::nn
