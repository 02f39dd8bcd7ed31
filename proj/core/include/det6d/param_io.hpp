#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "det6d/nn.hpp"

namespace det6d::nn {

/// Flat little-endian container for a list of MLPs:
///
///   bytes 0-7   magic "DET6DNN\0"
///   u32         format version (1)
///   u32         number of MLPs
///   per MLP:    u32 layer count
///     per layer: u32 out, u32 in, u32 activation (0 none, 1 relu, 2 sigmoid)
///                f64[out*in] weights (row-major), f64[out] bias
std::vector<std::uint8_t> serialize_params(std::span<const MlpParams> mlps);
std::vector<MlpParams> deserialize_params(std::span<const std::uint8_t> bytes);

void write_params(const std::filesystem::path& path, std::span<const MlpParams> mlps);
std::vector<MlpParams> read_params(const std::filesystem::path& path);

}  // namespace det6d::nn
