#include <benchmark/benchmark.h>

#include "lbm/evaluation.hpp"
#include "lbm/inference.hpp"

namespace {

using namespace lbm;

const SimulatedData& staircase() {
    static const SimulatedData sim =
        simulate_dataset(staircase_parameters(3, 4, 0.15), 137, 33, 42);
    return sim;
}

void BM_Icl(benchmark::State& state) {
    const auto& sim = staircase();
    const Prior prior;
    for (auto _ : state) {
        benchmark::DoNotOptimize(icl(sim.data, sim.truth, 3, 4, prior));
    }
}
BENCHMARK(BM_Icl);

void BM_VbayesStep(benchmark::State& state) {
    const auto& sim = staircase();
    const Prior prior;
    const auto g = static_cast<int>(state.range(0));
    const auto init = gibbs_init(sim.data, g, g + 1, prior, 5, 7);
    const auto vs = VariationalState::from_partition(init.part);
    for (auto _ : state) {
        benchmark::DoNotOptimize(vbayes_step(sim.data, vs, init.params, prior));
    }
}
BENCHMARK(BM_VbayesStep)->Arg(2)->Arg(3)->Arg(7);

void BM_GibbsSweeps(benchmark::State& state) {
    const auto& sim = staircase();
    const Prior prior;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            gibbs_init(sim.data, 3, 4, prior, static_cast<int>(state.range(0)), 7));
    }
}
BENCHMARK(BM_GibbsSweeps)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
    const auto& sim = staircase();
    FitOptions options;
    options.restarts = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit(sim.data, 3, 4, Prior{}, options, 9));
    }
}
BENCHMARK(BM_Fit)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_BestMatch(benchmark::State& state) {
    const int g = static_cast<int>(state.range(0));
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> ref_d(0, g - 1);
    std::uniform_int_distribution<int> est_d(0, g);
    std::vector<int> ref(500);
    std::vector<int> est(500);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        ref[i] = ref_d(rng);
        est[i] = est_d(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(best_match(ref, est, g, g + 1));
    }
}
BENCHMARK(BM_BestMatch)->Arg(3)->Arg(5)->Arg(7);

} // namespace

BENCHMARK_MAIN();
