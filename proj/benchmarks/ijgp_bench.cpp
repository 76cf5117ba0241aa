#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ijgp/decomposition.hpp"
#include "ijgp/factor.hpp"
#include "ijgp/generators.hpp"
#include "ijgp/propagation.hpp"

using namespace ijgp;

namespace {

// Combine three tables over `width` binary variables (sliding windows) and sum
// out everything but the first variable.
void BM_SumProduct(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> cards(width + 2, 2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<Factor> fs;
  for (VarId off = 0; off < 3; ++off) {
    std::vector<VarId> vars;
    for (VarId v = off; v < off + width; ++v) vars.push_back(v);
    std::vector<double> t(std::size_t{1} << width);
    for (double& x : t) x = u(rng);
    fs.emplace_back(Scope(vars, std::vector<std::size_t>(width, 2)), std::move(t));
  }
  std::vector<const Factor*> ptrs{&fs[0], &fs[1], &fs[2]};
  const std::vector<VarId> keep{0};
  for (auto _ : state) benchmark::DoNotOptimize(sum_product(ptrs, keep));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(std::size_t{1} << (width + 2)));
}
BENCHMARK(BM_SumProduct)->DenseRange(4, 14, 2)->Complexity();

// One sweep on a (50,2,45,3) instance with 5 observed variables, per i-bound.
void BM_Sweep(benchmark::State& state) {
  const auto i = static_cast<std::size_t>(state.range(0));
  const GeneratedInstance g = gen_random({50, 2, 45, 3, 1000, 5});
  const ArcLabeledJoinGraph jg = join_graph_structuring(g.network, min_fill_ordering(moral_graph(g.network)), i);
  IjgpEngine engine(g.network, g.evidence, jg);
  engine.sweep();
  for (auto _ : state) benchmark::DoNotOptimize(engine.sweep());
  state.counters["clusters"] = static_cast<double>(jg.nodes.size());
}
BENCHMARK(BM_Sweep)->DenseRange(2, 10, 1)->Unit(benchmark::kMillisecond);

void BM_Structuring(benchmark::State& state) {
  const auto i = static_cast<std::size_t>(state.range(0));
  const GeneratedInstance g = gen_random({50, 2, 45, 3, 1000, 0});
  for (auto _ : state)
    benchmark::DoNotOptimize(join_graph_structuring(g.network, min_fill_ordering(moral_graph(g.network)), i));
}
BENCHMARK(BM_Structuring)->Arg(2)->Arg(5)->Arg(8)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
