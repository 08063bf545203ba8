#pragma once

#include "impulse/gbm_primitives.hpp"
#include "impulse/simulation.hpp"
#include "sim_rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace impulse::detail {

// Worker cap from IMPULSE_SS_THREADS (0 or unset = hardware concurrency).
inline int thread_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("IMPULSE_SS_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && parsed > 0) return static_cast<int>(parsed);
    }
    return hw;
}

inline void validate_config(const SimConfig& cfg) {
    if (!(cfg.x0 > 0.0)) throw SimulationError("sim config: x0 must be > 0");
    if (cfg.n_paths < 1) throw SimulationError("sim config: n_paths must be >= 1");
    if (!(cfg.dt > 0.0)) throw SimulationError("sim config: dt must be > 0");
    if (!(cfg.horizon >= cfg.dt)) throw SimulationError("sim config: horizon must be >= dt");
}

inline void validate_policy(const ImpulsePolicy& policy) {
    if (const auto* rule = std::get_if<SsRule>(&policy)) {
        if (!(rule->s > 0.0 && rule->S > rule->s))
            throw SimulationError("trigger-target rule requires 0 < s < S");
    } else if (const auto* sched = std::get_if<FixedSchedule>(&policy)) {
        double prev = -1.0;
        for (const auto& [time, size] : sched->jumps) {
            if (!(time >= 0.0) || !(time > prev))
                throw SimulationError("fixed schedule times must be nonnegative and increasing");
            if (!(size > 0.0)) throw SimulationError("fixed schedule sizes must be > 0");
            prev = time;
        }
    }
}

// Grid size: N steps of dt covering [0, N*dt], N = round(horizon/dt).
inline long long step_count(const SimConfig& cfg) {
    return std::max<long long>(1, std::llround(cfg.horizon / cfg.dt));
}

// Tail bound e^{-rho T} (f*(c0 rho)/rho + c0 * Ebound(X_T)) from the linear
// growth bound at alpha = c0*rho; Ebound is a policy-dependent bound on
// E[X_T]: between impulses E[X_t] grows at most like e^{nu+ t}, and impulses
// reset the state to S (trigger-target) or add their fixed sizes.
inline double truncation_bound(const ProblemSpec& spec, const ImpulsePolicy& policy,
                               const SimConfig& cfg) {
    const double t_end = double(step_count(cfg)) * cfg.dt;
    double state_bound = cfg.x0;
    if (const auto* rule = std::get_if<SsRule>(&policy)) {
        state_bound = std::max(cfg.x0, rule->S);
    } else if (const auto* sched = std::get_if<FixedSchedule>(&policy)) {
        for (const auto& [time, size] : sched->jumps)
            if (time <= t_end) state_bound += size;
    }
    state_bound *= std::exp(std::max(spec.nu, 0.0) * t_end);
    const double alpha = spec.c0 * spec.rho;
    return std::exp(-spec.rho * t_end) *
           (reward_fenchel(spec.gamma, alpha) / spec.rho + spec.c0 * state_bound);
}

// Mean and standard error accumulated in fixed path order so results are
// bit-identical for any worker count. Defined in simulation.cpp: the
// finiteness check on payoffs must not be compiled under relaxed FP flags.
PayoffEstimate estimate_from_payoffs(const std::vector<double>& payoffs, double trunc);

// One unit of work for the batched common-noise kernel: a policy paired with
// its own initial state, so several start points can share one noise pass.
struct BatchJob {
    double x0 = 0.0;
    bool has_rule = false;  // false = never intervene
    double s = 0.0;
    double S = 0.0;
};

// Batched kernel (defined in sim_batch.cpp, built with relaxed FP flags):
// fills payoffs[j][p] with job j's discounted payoff on path p under the
// exact scheme, every job sharing the path's noise. Inputs are validated by
// the caller; payoffs must be presized to jobs.size() x cfg.n_paths.
void batch_run_crn(const ProblemSpec& spec, const std::vector<BatchJob>& jobs,
                   const SimConfig& cfg, std::vector<std::vector<double>>& payoffs);

// Runs fn(path_begin, path_end) over a contiguous partition of the path
// range, inline when one worker suffices. Worker exceptions are rethrown.
template <class Fn>
void parallel_for_paths(long long n_paths, Fn&& fn) {
    const int workers =
        static_cast<int>(std::min<long long>(thread_count(), n_paths));
    if (workers <= 1) {
        fn(0, n_paths);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const long long block = (n_paths + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long long lo = w * block;
        const long long hi = std::min(n_paths, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([&, w, lo, hi] {
            try {
                fn(lo, hi);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct NullObserver {
    void on_point(double, double, bool) {}
};

// Reference per-step engine: one path's discounted payoff under any policy
// and either scheme. The observer sees every grid point (post-impulse state)
// in time order. The batched kernel reproduces this loop's arithmetic through
// segment sums; keep the two in sync (unit tests pin their agreement).
template <class Observer>
double run_single_path(const ProblemSpec& spec, const ImpulsePolicy& policy, const SimConfig& cfg,
                       long long path_index, Observer&& obs) {
    const long long n_steps = step_count(cfg);
    const double dt = cfg.dt;
    const double disc_step = std::exp(-spec.rho * dt);
    const double inv_gamma = 1.0 / spec.gamma;

    const SsRule* rule = std::get_if<SsRule>(&policy);
    const FixedSchedule* sched = std::get_if<FixedSchedule>(&policy);
    std::size_t sched_idx = 0;

    Xoshiro256pp rng = Xoshiro256pp::for_path(cfg.seed, path_index);
    double z_buf[kChunkNormals];
    long long z_left = 0;
    int z_pos = 0;

    double x = cfg.x0;
    double payoff = 0.0;
    double disc = 1.0;

    // Impulse checks happen at every grid time including t = 0.
    bool jumped = false;
    if (rule && x <= rule->s) {
        payoff -= spec.c0 * (rule->S - x) + spec.c1;
        x = rule->S;
        jumped = true;
    } else if (sched) {
        while (sched_idx < sched->jumps.size() && sched->jumps[sched_idx].first <= 0.0) {
            payoff -= spec.c0 * sched->jumps[sched_idx].second + spec.c1;
            x += sched->jumps[sched_idx].second;
            ++sched_idx;
            jumped = true;
        }
    }
    obs.on_point(0.0, x, jumped);

    double g_left = std::pow(x, spec.gamma) * inv_gamma;
    long long remaining = n_steps;
    for (long long k = 1; k <= n_steps; ++k) {
        if (z_left == 0) {
            const int chunk = static_cast<int>(std::min<long long>(kChunkNormals, remaining));
            fill_normals(rng, z_buf, chunk);
            z_left = chunk;
            z_pos = 0;
        }
        const double z = z_buf[z_pos++];
        --z_left;
        --remaining;

        const double x_pre = cfg.scheme == Scheme::exact_gbm ? step_exact(x, dt, z, spec)
                                                             : step_euler(x, dt, z, spec);
        disc *= disc_step;
        const double g_right = disc * std::pow(x_pre, spec.gamma) * inv_gamma;
        payoff += 0.5 * dt * (g_left + g_right);
        x = x_pre;

        jumped = false;
        if (k < n_steps) {
            const double t_k = double(k) * dt;
            if (rule && x <= rule->s) {
                payoff -= disc * (spec.c0 * (rule->S - x) + spec.c1);
                x = rule->S;
                jumped = true;
            } else if (sched) {
                while (sched_idx < sched->jumps.size() &&
                       sched->jumps[sched_idx].first <= t_k) {
                    payoff -= disc * (spec.c0 * sched->jumps[sched_idx].second + spec.c1);
                    x += sched->jumps[sched_idx].second;
                    ++sched_idx;
                    jumped = true;
                }
            }
        }
        obs.on_point(double(k) * dt, x, jumped);
        g_left = disc * std::pow(x, spec.gamma) * inv_gamma;
    }
    return payoff;
}

}  // namespace impulse::detail
