#include <benchmark/benchmark.h>

#include "det6d/geom.hpp"
#include "det6d/random.hpp"

using namespace det6d;

namespace {

FullPoseBox random_box(Rng& rng, double spread) {
  FullPoseBox b;
  b.center = Vec3(uniform(rng, -spread, spread), uniform(rng, -spread, spread), uniform(rng, -0.5, 0.5));
  b.dims = {uniform(rng, 3.5, 4.5), uniform(rng, 1.5, 1.9), uniform(rng, 1.4, 1.7)};
  b.euler = {uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), uniform(rng, -kPi, kPi)};
  b.score = uniform(rng, 0, 1);
  return b;
}

std::vector<std::pair<FullPoseBox, FullPoseBox>> overlapping_pairs(std::size_t n) {
  Rng rng(11);
  std::vector<std::pair<FullPoseBox, FullPoseBox>> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(random_box(rng, 1.0), random_box(rng, 1.0));
  return out;
}

void BM_BevIou(benchmark::State& state) {
  const auto pairs = overlapping_pairs(256);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ % pairs.size()];
    benchmark::DoNotOptimize(bev_iou(a, b));
  }
}
BENCHMARK(BM_BevIou);

void BM_Iou3d(benchmark::State& state) {
  const auto pairs = overlapping_pairs(256);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ % pairs.size()];
    benchmark::DoNotOptimize(iou3d(a, b));
  }
}
BENCHMARK(BM_Iou3d);

void BM_Nms(benchmark::State& state) {
  Rng rng(5);
  std::vector<FullPoseBox> dets;
  for (int i = 0; i < state.range(0); ++i) dets.push_back(random_box(rng, 20.0));
  for (auto _ : state) benchmark::DoNotOptimize(nms(dets, 0.1));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Nms)->RangeMultiplier(4)->Range(64, 1024)->Complexity();

void BM_Fps(benchmark::State& state) {
  Rng rng(9);
  PointCloud cloud;
  for (int i = 0; i < state.range(0); ++i) {
    cloud.points.emplace_back(uniform(rng, 0, 70), uniform(rng, -40, 40), uniform(rng, -3, 1));
  }
  const auto k = static_cast<std::size_t>(state.range(0) / 4);
  for (auto _ : state) benchmark::DoNotOptimize(fps(cloud, k));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fps)->RangeMultiplier(4)->Range(1024, 16384)->Unit(benchmark::kMillisecond);

void BM_PointsInBox(benchmark::State& state) {
  Rng rng(2);
  PointCloud cloud;
  for (int i = 0; i < 16384; ++i) {
    cloud.points.emplace_back(uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -2, 2));
  }
  const FullPoseBox box = random_box(rng, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(points_in_box(cloud, box));
}
BENCHMARK(BM_PointsInBox);

}  // namespace
