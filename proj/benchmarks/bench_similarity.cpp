#include <benchmark/benchmark.h>

#include "omnitraj/random.hpp"
#include "omnitraj/similarity.hpp"

using namespace omnitraj;

namespace {

std::vector<Point> walk(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<Point> p(n);
  for (std::size_t i = 1; i < n; ++i) p[i] = {p[i - 1].x + rng.uniform(-1, 1), p[i - 1].y + rng.uniform(-1, 1)};
  return p;
}

// All four measures are quadratic in the point count; doubling n should
// roughly quadruple the time.
void measure(benchmark::State& state, Measure m) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = walk(1, n), b = walk(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_measure(m, a, b, 0.5));
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(measure, dtw, Measure::dtw)->RangeMultiplier(2)->Range(32, 512)->Complexity(benchmark::oNSquared);
BENCHMARK_CAPTURE(measure, edr, Measure::edr)->RangeMultiplier(2)->Range(32, 512)->Complexity(benchmark::oNSquared);
BENCHMARK_CAPTURE(measure, hausdorff, Measure::hausdorff)
    ->RangeMultiplier(2)
    ->Range(32, 512)
    ->Complexity(benchmark::oNSquared);
BENCHMARK_CAPTURE(measure, frechet, Measure::frechet)
    ->RangeMultiplier(2)
    ->Range(32, 512)
    ->Complexity(benchmark::oNSquared);

BENCHMARK_MAIN();
