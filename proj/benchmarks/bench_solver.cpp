// Microbenchmarks for the closed-form layer, the boundary solver, and value
// function evaluation.

#include "impulse/policy_solver.hpp"
#include "impulse/value_function.hpp"

#include <benchmark/benchmark.h>

namespace {

impulse::ProblemSpec reference_spec() {
    return {0.08, -0.07, 0.25, 0.5, 1.0, 10.0};
}

void bm_solve_reference(benchmark::State& state) {
    const auto spec = reference_spec();
    for (auto _ : state) {
        auto outcome = impulse::solve(spec);
        benchmark::DoNotOptimize(outcome);
    }
}
BENCHMARK(bm_solve_reference);

void bm_solve_sigma_sweep(benchmark::State& state) {
    auto spec = reference_spec();
    constexpr double sigmas[] = {0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
    for (auto _ : state) {
        for (double sigma : sigmas) {
            spec.sigma = sigma;
            auto outcome = impulse::solve(spec);
            benchmark::DoNotOptimize(outcome);
        }
    }
    state.SetItemsProcessed(state.iterations() * std::size(sigmas));
}
BENCHMARK(bm_solve_sigma_sweep);

void bm_value_eval(benchmark::State& state) {
    const auto vf = impulse::make_value_function(reference_spec());
    double x = 0.013;
    for (auto _ : state) {
        benchmark::DoNotOptimize(impulse::eval(vf, x));
        x = x < 9.0e3 ? x * 1.37 : 0.013;
    }
}
BENCHMARK(bm_value_eval);

void bm_qvi_residual(benchmark::State& state) {
    const auto vf = impulse::make_value_function(reference_spec());
    double x = 0.013;
    for (auto _ : state) {
        benchmark::DoNotOptimize(impulse::qvi_residual(vf, x));
        x = x < 9.0e3 ? x * 1.37 : 0.013;
    }
}
BENCHMARK(bm_qvi_residual);

void bm_fenchel(benchmark::State& state) {
    const auto p = impulse::GbmPrimitives::build(reference_spec());
    double alpha = 0.11;
    for (auto _ : state) {
        benchmark::DoNotOptimize(impulse::vhat_fenchel(p, alpha));
        alpha = alpha < 40.0 ? alpha * 1.19 : 0.11;
    }
}
BENCHMARK(bm_fenchel);

}  // namespace

BENCHMARK_MAIN();
