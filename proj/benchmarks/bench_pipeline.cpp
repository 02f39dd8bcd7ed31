#include <benchmark/benchmark.h>

#include "det6d/head.hpp"
#include "det6d/random.hpp"
#include "det6d/slopeaug.hpp"
#include "det6d/synth.hpp"

using namespace det6d;

namespace {

void BM_HeadForward(benchmark::State& state) {
  HeadConfig cfg;  // full-width head
  const HeadParams p = init_head(cfg, 1);
  Rng rng(3);
  nn::Tensor2 x(state.range(0), cfg.feature_dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gaussian(rng, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(head_forward(p, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HeadForward)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SlopeAugApply(benchmark::State& state) {
  SceneSpec spec;
  spec.terrain = Terrain::flat();
  spec.density = 10.0;
  Rng rng(4);
  const auto boxes = place_boxes(spec.terrain, spec, rng);
  const LabeledFrame frame = sample_scene(spec.terrain, boxes, spec, rng);
  const SlopeAugParams params = params_from_anchor(15.0, 0.2, deg_to_rad(12));
  for (auto _ : state) benchmark::DoNotOptimize(apply(frame, params));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frame.cloud.size()));
}
BENCHMARK(BM_SlopeAugApply)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
