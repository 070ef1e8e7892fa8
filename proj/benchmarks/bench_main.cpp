#include <benchmark/benchmark.h>

#include "qtbias/bias.hpp"
#include "qtbias/collapse.hpp"
#include "qtbias/dynamics.hpp"
#include "qtbias/trajectory.hpp"

using namespace qtbias;

namespace {

ModelParams paper_point(int n) {
    ModelParams p;
    p.omega = 10.0;
    p.gamma = 1.0;
    p.dt = 1.0;
    p.n_collisions = n;
    return p;
}

void BM_BuildTiltedSchedule(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ModelParams p = paper_point(n);
    const BiasSchedule sched{3.0, std::vector<double>(static_cast<std::size_t>(n), 1.0)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_tilted_schedule(p, sched));
    }
}
BENCHMARK(BM_BuildTiltedSchedule)->Arg(10)->Arg(20)->Arg(40);

void BM_SampleRecord(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ModelParams p = paper_point(n);
    const FiSampler sampler(p, BiasSchedule::unbiased(n), 0.0);
    std::uint64_t index = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sampler.sample_record(1, 0, index++));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleRecord)->Arg(10)->Arg(20);

void BM_Enumerate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ModelParams p = paper_point(n);
    const BiasSchedule sched = BiasSchedule::unbiased(n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_fi_enumerate(p, sched, 1e-3, 24, 1));
    }
    state.SetComplexityN(1 << n);
}
BENCHMARK(BM_Enumerate)->Arg(8)->Arg(12)->Arg(16)->Complexity(benchmark::oN);

void BM_LmeIntegrate(benchmark::State& state) {
    const CMatrix rho0 = outer(PureState::ground());
    for (auto _ : state) {
        benchmark::DoNotOptimize(integrate_lme(2.0, 1.0, rho0, 1.0, 1e-3, 1000));
    }
}
BENCHMARK(BM_LmeIntegrate);

void BM_CollapseMeasure(benchmark::State& state) {
    CollapseDataset ds;
    int si = 0;
    for (double l : {10.0, 20.0, 40.0, 80.0}) {
        CollapseSet set;
        set.l = l;
        const double dx = 2.3 / 29.0;
        for (int k = 0; k < 30; ++k) {
            const double x = 0.2 + dx * k + si * 0.05 * dx;
            set.points.push_back({x * l, x * x * l * l * x * std::exp(-x)});
        }
        ds.sets.push_back(std::move(set));
        ++si;
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(measure(ds, 2.0, 1.0));
    }
}
BENCHMARK(BM_CollapseMeasure);

}  // namespace

BENCHMARK_MAIN();
