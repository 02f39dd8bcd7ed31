#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace det6d {

using Rng = std::mt19937_64;

/// Per-frame seed derived from the global seed and the frame id, so results
/// do not depend on the order in which frames are processed.
std::uint64_t frame_seed(std::uint64_t global_seed, std::string_view frame_id);

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

}  // namespace det6d
