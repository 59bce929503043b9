#include <benchmark/benchmark.h>

#include <vector>

#include "dynrisk/duality.hpp"
#include "dynrisk/generators.hpp"
#include "dynrisk/indices.hpp"
#include "dynrisk/measure_sets.hpp"
#include "dynrisk/oracle.hpp"
#include "dynrisk/risk_measures.hpp"

namespace {

using namespace dynrisk;

ScenarioTree regular(int depth, std::size_t branching) {
  const std::vector<std::size_t> b(static_cast<std::size_t>(depth), branching);
  return ScenarioTree::regular_uniform(b);
}

void BM_CapUpperRoot(benchmark::State& state) {
  const auto tree = regular(static_cast<int>(state.range(0)), 3);
  auto rng = seeded_rng(1);
  const auto x = random_terminal(tree, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(robust_conditional_expectation(tree, sets::CapUpper{2.0}, x, 0));
  }
  state.counters["leaves"] = static_cast<double>(tree.leaf_count());
}
BENCHMARK(BM_CapUpperRoot)->DenseRange(1, 6);

void BM_OracleCapUpper(benchmark::State& state) {
  const auto tree = regular(2, static_cast<std::size_t>(state.range(0)));
  auto rng = seeded_rng(2);
  const auto x = random_terminal(tree, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle::brute_inf_at(tree, sets::CapUpper{2.0}, x, tree.root()));
  }
}
BENCHMARK(BM_OracleCapUpper)->DenseRange(2, 4);

void BM_EvalDcrmAllTimes(benchmark::State& state) {
  const auto tree = regular(4, 3);
  auto rng = seeded_rng(3);
  const auto d = random_process(tree, rng);
  const auto seq = MeasureSetSequence::constant(tree, sets::CapLower{2.0});
  for (auto _ : state) {
    for (int t = 0; t <= tree.horizon(); ++t) benchmark::DoNotOptimize(eval_dcrm_from_sets(tree, seq, d, t));
  }
}
BENCHMARK(BM_EvalDcrmAllTimes);

void BM_Dglr(benchmark::State& state) {
  const auto tree = regular(4, 3);
  auto rng = seeded_rng(4);
  const auto d = random_process(tree, rng);
  for (auto _ : state) benchmark::DoNotOptimize(dglr(tree, d, 0));
}
BENCHMARK(BM_Dglr);

void BM_UpperLimitLevel(benchmark::State& state) {
  const auto tree = regular(3, 2);
  auto rng = seeded_rng(5);
  const auto d = random_process(tree, rng, -1.0, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(limit_ratio(tree, d, 0, LimitDirection::upper));
}
BENCHMARK(BM_UpperLimitLevel);

void BM_DcrmFromDglr(benchmark::State& state) {
  const auto tree = regular(3, 2);
  auto rng = seeded_rng(6);
  const auto d = random_process(tree, rng);
  const auto rm = dcrm_from_index(dglr_index(), 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(rm.by_atom(tree, 0, d));
}
BENCHMARK(BM_DcrmFromDglr);

void BM_CounterexampleSearch(benchmark::State& state) {
  CounterexampleSearch config;
  config.seed = 99;
  for (auto _ : state) benchmark::DoNotOptimize(find_d7_counterexample(dglr_index(), config, 1000));
}
BENCHMARK(BM_CounterexampleSearch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
