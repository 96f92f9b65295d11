#include <benchmark/benchmark.h>

#include <cmath>

#include "omnitraj/random.hpp"
#include "omnitraj/retrieval.hpp"

using namespace omnitraj;

namespace {

std::vector<float> unit_rows(Rng& rng, std::size_t n, std::size_t w) {
  std::vector<float> m(n * w);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0;
    std::vector<double> v(w);
    for (auto& e : v) {
      e = rng.normal();
      s += e * e;
    }
    for (std::size_t c = 0; c < w; ++c) m[r * w + c] = static_cast<float>(v[c] / std::sqrt(s));
  }
  return m;
}

EmbeddingStore store_of(std::size_t rows) {
  Rng rng(rows);
  std::vector<TrajectoryId> ids(rows);
  for (std::size_t i = 0; i < rows; ++i) ids[i] = static_cast<TrajectoryId>(i);
  return EmbeddingStore(kTraj, 64, {}, std::move(ids), unit_rows(rng, rows, 64));
}

// Exact scan cost is linear in the store size.
void scan(benchmark::State& state) {
  const auto store = store_of(static_cast<std::size_t>(state.range(0)));
  Rng rng(7);
  const auto queries = unit_rows(rng, 100, 64);
  for (auto _ : state) benchmark::DoNotOptimize(topk_batch(store, queries, 10, 1));
  state.SetComplexityN(state.range(0));
  state.SetItemsProcessed(state.iterations() * 100);
}

void two_stage_scan(benchmark::State& state) {
  const auto fine = store_of(static_cast<std::size_t>(state.range(0)));
  const auto coarse = store_of(static_cast<std::size_t>(state.range(0)));
  Rng rng(8);
  const auto q = unit_rows(rng, 2, 64);
  const std::span<const float> qc(q.data(), 64), qf(q.data() + 64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(two_stage(coarse, fine, qc, qf, fine.size() / 10, 10));
}

}  // namespace

BENCHMARK(scan)->Arg(2000)->Arg(20000)->Arg(200000)->Complexity(benchmark::oN)->Unit(benchmark::kMillisecond);
BENCHMARK(two_stage_scan)->Arg(20000)->Arg(200000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
