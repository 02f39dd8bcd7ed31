#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "det6d/codec.hpp"
#include "det6d/losses.hpp"
#include "det6d/nn.hpp"

namespace det6d {

struct HeadConfig {
  Eigen::Index feature_dim = 256;
  std::vector<Eigen::Index> shared_widths{512, 256};
  /// Hidden widths of the terrain segmentation MLP; a 1-unit logit layer follows.
  std::vector<Eigen::Index> seg_widths{64};
  CodecConfig codec;
  int class_count = 2;  // {background, car}

  void validate() const;
};

/// Terrain segmentation MLP on the raw center features, a shared trunk, and
/// one dense layer per prediction branch on top of the trunk.
struct HeadParams {
  nn::MlpParams seg;
  nn::MlpParams shared;
  nn::MlpParams cls;
  nn::MlpParams yaw_bin;
  nn::MlpParams yaw_residual;
  nn::MlpParams tilt;
  nn::MlpParams dims;
  nn::MlpParams offset;

  static constexpr std::size_t kMlpCount = 8;

  std::vector<nn::MlpParams> to_list() const;
  static HeadParams from_list(std::vector<nn::MlpParams> mlps);

  nn::Vector flatten() const;
  void unflatten(const nn::Vector& flat);
  std::size_t parameter_count() const;
};

HeadParams init_head(const HeadConfig& cfg, std::uint64_t seed);

struct HeadCache {
  nn::MlpCache seg;
  nn::MlpCache shared;
  nn::MlpCache cls, yaw_bin, yaw_residual, tilt, dims, offset;
};

struct HeadForward {
  HeadOutput out;
  HeadCache cache;
};

HeadForward head_forward_cached(const HeadParams& params, const nn::Tensor2& features);
inline HeadOutput head_forward(const HeadParams& params, const nn::Tensor2& features) {
  return head_forward_cached(params, features).out;
}

/// One box per center. Roll and pitch are zero unless s_g > 0.5.
std::vector<FullPoseBox> head_decode(const HeadOutput& out, const PointCloud& centers,
                                     const CodecConfig& cfg);

struct HeadLoss {
  LossTerms terms;
  nn::Vector grads;  // same layout as HeadParams::flatten()
};

HeadLoss head_loss(const HeadParams& params, const nn::Tensor2& features,
                   const TargetSet& targets, const BoxLossOptions& options = {});

/// A batch of coarse centers with their features and targets.
struct ToySample {
  PointCloud centers;
  nn::Tensor2 features;
  TargetSet targets;
  std::vector<FullPoseBox> boxes;
};

struct TrainConfig {
  HeadConfig head;
  int epochs = 200;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  BoxLossOptions loss;
};

struct EpochLog {
  int epoch = 0;
  LossTerms terms;  // mean over the epoch's minibatches
};

struct TrainResult {
  HeadParams params;
  std::vector<EpochLog> log;
};

/// Adam on head_loss over shuffled minibatches drawn from all samples.
/// Deterministic for a given seed.
TrainResult train_toy(std::span<const ToySample> dataset, const TrainConfig& cfg,
                      const std::optional<HeadParams>& init = std::nullopt);

struct HeadMetrics {
  std::size_t foreground = 0;
  std::size_t sloped = 0;         // foreground centers labeled as on sloped terrain
  double seg_f1 = 0.0;            // terrain segmentation over foreground, s_g > 0.5
  double roll_mae_deg = 0.0;      // decoded roll over sloped foreground centers
  double pitch_mae_deg = 0.0;
  std::size_t gated_flat = 0;     // centers with s_g <= 0.5
  std::size_t gated_nonzero = 0;  // of those, decoded roll or pitch != 0
  double class_accuracy = 0.0;    // over all centers
};

HeadMetrics evaluate_head(const HeadParams& params, std::span<const ToySample> dataset,
                          const CodecConfig& codec);

/// CSV with header epoch,total,cls,seg,tilt,yaw_cls,yaw_reg,dim,posi.
void write_training_log(std::ostream& os, std::span<const EpochLog> log);

}  // namespace det6d
