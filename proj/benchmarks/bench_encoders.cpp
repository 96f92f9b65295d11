#include <benchmark/benchmark.h>

#include "omnitraj/model.hpp"
#include "omnitraj/nn/autograd.hpp"
#include "omnitraj/random.hpp"

using namespace omnitraj;

namespace {

EncoderConfig config(int length, int patch) {
  EncoderConfig cfg;
  cfg.road_vocab = 128;
  cfg.length = length;
  cfg.patch = patch;
  cfg.frame_box = {-1, -1, 1, 1};
  return cfg;
}

// Attention over N_p = L / P patches: cost grows with N_p squared once the
// sequence dominates the per-token linear layers.
void trajectory_encoder(benchmark::State& state) {
  const int patches = static_cast<int>(state.range(0));
  const OmniModel model(config(patches * 2, 2));
  Rng rng(1);
  std::vector<Point> pts(static_cast<std::size_t>(patches * 2));
  for (auto& p : pts) p = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  nn::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.embed_trajectory(pts));
  state.SetComplexityN(patches);
}

void road_encoder(benchmark::State& state) {
  const OmniModel model(config(64, 8));
  std::vector<SegmentId> ids(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<SegmentId>(i % 128);
  nn::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.embed_road(ids));
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(trajectory_encoder)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNSquared);
BENCHMARK(road_encoder)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNSquared);

BENCHMARK_MAIN();
