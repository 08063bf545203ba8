// Throughput benchmarks for the Monte-Carlo engine: single-policy runs and
// the batched common-noise kernel.

#include "impulse/simulation.hpp"
#include "sim_detail.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

namespace {

impulse::ProblemSpec reference_spec() {
    return {0.08, -0.07, 0.25, 0.5, 1.0, 10.0};
}

impulse::SimConfig bench_config(int n_paths) {
    impulse::SimConfig cfg;
    cfg.x0 = 20.0;
    cfg.n_paths = n_paths;
    cfg.dt = 1e-3;
    cfg.horizon = 1.0;
    cfg.seed = 77;
    return cfg;
}

long steps_per_path(const impulse::SimConfig& cfg) {
    return std::llround(cfg.horizon / cfg.dt);
}

void bm_null_policy(benchmark::State& state) {
    const auto spec = reference_spec();
    const auto cfg = bench_config(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto est = impulse::run_policy(spec, impulse::NullPolicy{}, cfg);
        benchmark::DoNotOptimize(est);
    }
    state.SetItemsProcessed(state.iterations() * cfg.n_paths * steps_per_path(cfg));
}
BENCHMARK(bm_null_policy)->Arg(256)->Arg(2048);

void bm_trigger_target_rule(benchmark::State& state) {
    const auto spec = reference_spec();
    const auto cfg = bench_config(static_cast<int>(state.range(0)));
    const impulse::SsRule rule{8.7492, 56.9930};
    for (auto _ : state) {
        auto est = impulse::run_policy(spec, rule, cfg);
        benchmark::DoNotOptimize(est);
    }
    state.SetItemsProcessed(state.iterations() * cfg.n_paths * steps_per_path(cfg));
}
BENCHMARK(bm_trigger_target_rule)->Arg(256)->Arg(2048);

void bm_batched_common_noise(benchmark::State& state) {
    const auto spec = reference_spec();
    const auto cfg = bench_config(static_cast<int>(state.range(0)));
    const std::vector<impulse::detail::BatchJob> jobs = {
        {20.0, false, 0.0, 0.0},
        {20.0, true, 8.7492, 56.9930},
        {5.0, true, 8.7492, 56.9930},
    };
    std::vector<std::vector<double>> payoffs(jobs.size(), std::vector<double>(cfg.n_paths));
    for (auto _ : state) {
        impulse::detail::batch_run_crn(spec, jobs, cfg, payoffs);
        benchmark::DoNotOptimize(payoffs);
    }
    state.SetItemsProcessed(state.iterations() * jobs.size() * cfg.n_paths * steps_per_path(cfg));
}
BENCHMARK(bm_batched_common_noise)->Arg(256)->Arg(2048);

}  // namespace
