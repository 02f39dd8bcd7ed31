#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace det6d {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;  // coordinates compared, summed over points
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int points = 0;
  int redrawn = 0;  // draws rejected as below finite-difference resolution
};

/// Central-difference checks of every differentiable kernel and of the full
/// head loss, each at `points` random inputs drawn from `seed`.
std::vector<GradCheckEntry> run_gradient_suite(std::uint64_t seed = 7, int points = 10,
                                               double epsilon = 1e-6);

}  // namespace det6d
