#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mvsde/engine.hpp"
#include "mvsde/implicit.hpp"
#include "mvsde/model.hpp"
#include "mvsde/noise.hpp"
#include "mvsde/schemes.hpp"

using namespace mvsde;

namespace {

ModelSpec gl() { return make_builtin("GinzburgLandau", {{"sigma", 1.5}, {"c", 0.5}}); }

void cubic_solve(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> rhs(-100.0, 100.0);
    std::vector<double> b(1024);
    for (auto& x : b) {
        x = rhs(rng);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_cubic_monotone(0.01, 1.0, b[i++ & 1023]));
    }
}
BENCHMARK(cubic_solve);

void noise_increment(benchmark::State& state) {
    const NoiseTable noise(7, 1024, 1, 1e-3, 1.0);
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(noise.increment(k & 1023, (k >> 10) % 1000, 0));
        ++k;
    }
}
BENCHMARK(noise_increment);

// One coarse step for N particles; range(0) = N, range(1) = scheme index.
void step(benchmark::State& state) {
    const auto spec = gl();
    const auto n = static_cast<std::size_t>(state.range(0));
    const double h = 0.01;
    const NoiseTable noise(3, n, 1, h, 1.0);
    const auto grid = TimeGrid::make(h, 1.0, noise);
    const auto cloud = sample_initial(InitialSampler::normal({1.0}, {0.25}, 3), n);
    SerialExecutor ex;
    const std::vector<SchemeKind> kinds{SplitStep{}, Tamed{0.5}, AdaptiveEuler{}, ExplicitEuler{}};
    const SchemeConfig cfg{kinds[static_cast<std::size_t>(state.range(1))], h, {}};
    state.SetLabel(scheme_label(cfg.kind));
    for (auto _ : state) {
        auto rec = advance(spec, cfg, cloud, 0, grid, noise, ex);
        benchmark::DoNotOptimize(rec.next.states().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(step)->ArgsProduct({{100, 1000, 10000}, {0, 1, 2, 3}});

void full_run(benchmark::State& state) {
    const auto spec = gl();
    const NoiseTable noise(3, 1000, 1, 0.01, 1.0);
    Engine engine(static_cast<unsigned>(state.range(0)));
    const auto sampler = InitialSampler::normal({1.0}, {0.25}, 3);
    for (auto _ : state) {
        auto traj = engine.run(spec, SchemeConfig{SplitStep{}, 0.01, {}}, 1000, sampler, noise);
        benchmark::DoNotOptimize(traj.terminal().states().data());
    }
}
BENCHMARK(full_run)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
