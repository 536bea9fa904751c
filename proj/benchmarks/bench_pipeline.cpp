#include <cmpairs/inference.hpp>
#include <cmpairs/matching.hpp>
#include <cmpairs/randtest.hpp>
#include <cmpairs/simulation.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace cmpairs;

void BM_GenerateTrial(benchmark::State& state) {
    const auto pairs = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_trial(default_dgp(), pairs, MatchMode::sorted_x, ++seed));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GenerateTrial)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_GreedyMatching(benchmark::State& state) {
    const auto pairs = static_cast<std::size_t>(state.range(0));
    const auto trial = generate_trial(default_dgp(), pairs, MatchMode::sorted_x, 1);
    const auto summaries = summarize(trial.dataset);
    const FeatureSelector features{{0}, true};
    for (auto _ : state) {
        benchmark::DoNotOptimize(pair_greedy_nn(summaries, features));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GreedyMatching)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oNSquared);

void BM_Infer(benchmark::State& state) {
    const auto trial = generate_trial(default_dgp(), static_cast<std::size_t>(state.range(0)),
                                      MatchMode::sorted_x, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(infer(trial.dataset, trial.design));
    }
}
BENCHMARK(BM_Infer)->Arg(100)->Arg(2000);

void BM_ExactRandomizationTest(benchmark::State& state) {
    const auto trial = generate_trial(default_dgp(), static_cast<std::size_t>(state.range(0)),
                                      MatchMode::sorted_x, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(randomization_test(trial.dataset, trial.design));
    }
}
BENCHMARK(BM_ExactRandomizationTest)->DenseRange(6, 14, 4);

void BM_StochasticRandomizationTest(benchmark::State& state) {
    const auto trial = generate_trial(default_dgp(), static_cast<std::size_t>(state.range(0)),
                                      MatchMode::sorted_x, 4);
    RandTestOptions opt;
    opt.mode = RandMode::stochastic;
    opt.draws = 999;
    opt.seed = 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(randomization_test(trial.dataset, trial.design, opt));
    }
}
BENCHMARK(BM_StochasticRandomizationTest)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
