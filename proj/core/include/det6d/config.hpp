#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "det6d/codec.hpp"
#include "det6d/eval.hpp"
#include "det6d/head.hpp"
#include "det6d/slopeaug.hpp"
#include "det6d/synth.hpp"

namespace det6d {

/// Everything a run needs. Angles are stored in radians; the JSON keys
/// carry a `_deg` suffix where the file uses degrees.
struct ToolkitConfig {
  std::size_t num_points = 16384;
  std::vector<std::size_t> sampling{4096, 1024, 512};
  double nms_iou = 0.1;
  CodecConfig codec;
  SlopeAugConfig slope_aug;
  EvalConfig eval;
  TrainConfig train;
  ToyDatasetSpec dataset;

  void validate() const;
};

struct ConfigOptions {
  bool strict = true;
};

struct LoadedConfig {
  ToolkitConfig config;
  std::vector<std::string> warnings;  // unknown keys in non-strict mode
};

LoadedConfig parse_config(const std::string& json_text, ConfigOptions options = {});
LoadedConfig load_config(const std::filesystem::path& path, ConfigOptions options = {});

/// Full document with every key, suitable as a starting template.
std::string dump_config(const ToolkitConfig& config);

}  // namespace det6d
