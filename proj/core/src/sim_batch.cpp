#include "impulse/simulation.hpp"

#include "sim_detail.hpp"
#include "sim_rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

// Batched engine for exact-GBM paths. The whole path lives in log space:
// with increments a = (nu - sigma^2/2) dt and b = sigma sqrt(dt), the k-th
// grid point of the uncontrolled log path is cum_k = a k + b (z_1+...+z_k),
// and a trigger-target policy only shifts the path by a constant between
// interventions. Everything expensive (normals, prefix sums, exp, block
// minima) is therefore computed once per path and shared by every job:
//   state            X_k = exp(L + cum_k), L = ln(post-jump state) - cum_jump
//   discounted reward g_k = e^{gamma L}/gamma * base_k,
//                     base_k = exp(gamma cum_k - rho dt k)
//   trigger          X_k <= s  <=>  cum_k <= ln(s) - L
// Per-job work is then a scan over precomputed block minima plus O(1)
// bookkeeping per intervention, reproducing the reference engine's
// trapezoidal sums exactly up to floating-point summation order.
//
// This translation unit is built with relaxed floating-point flags; it holds
// no finiteness checks and no library code that depends on strict IEEE
// semantics.

namespace impulse::detail {

namespace {

constexpr int kBlock = 512;  // cum values per block minimum

struct JobState {
    double acc = 0.0;      // accumulated discounted payoff
    double mult = 0.0;     // e^{gamma L}/gamma for the current segment
    double thresh = 0.0;   // trigger level in cum space: ln(s) - L
    double log_off = 0.0;  // L
    long long cursor = 0;  // last processed global step
    bool has_rule = false;
};

}  // namespace

void batch_run_crn(const ProblemSpec& spec, const std::vector<BatchJob>& jobs,
                   const SimConfig& cfg, std::vector<std::vector<double>>& payoffs) {
    const long long n_steps = step_count(cfg);
    const std::size_t n_jobs = jobs.size();
    const double dt = cfg.dt;
    const double a = (spec.nu - 0.5 * spec.sigma * spec.sigma) * dt;
    const double b = spec.sigma * std::sqrt(dt);
    const double g = spec.gamma;
    const double rdt = spec.rho * dt;
    const double inv_gamma = 1.0 / spec.gamma;

    std::vector<double> ln_s(n_jobs, 0.0), ln_S(n_jobs, 0.0);
    for (std::size_t j = 0; j < n_jobs; ++j) {
        if (jobs[j].has_rule) {
            ln_s[j] = std::log(jobs[j].s);
            ln_S[j] = std::log(jobs[j].S);
        }
    }

    parallel_for_paths(cfg.n_paths, [&](long long path_lo, long long path_hi) {
        std::vector<double> z(kChunkNormals);     // normals, then their prefix sums
        std::vector<double> cum(kChunkNormals);   // cumulative log path
        std::vector<double> base(kChunkNormals);  // exp(gamma cum - rho dt k)
        std::vector<double> psl(kChunkNormals);   // chunk-local prefix of dt*base
        std::vector<double> block_min(kChunkNormals / kBlock);
        std::vector<JobState> states(n_jobs);

        for (long long p = path_lo; p < path_hi; ++p) {
            // Grid time 0: trigger check and the leading half trapezoid
            // weight (base_0 = 1 analytically; chunks start at step 1).
            for (std::size_t j = 0; j < n_jobs; ++j) {
                const BatchJob& job = jobs[j];
                JobState st;
                st.has_rule = job.has_rule;
                if (job.has_rule && job.x0 <= job.s) {
                    st.acc -= spec.c0 * (job.S - job.x0) + spec.c1;
                    st.log_off = ln_S[j];
                } else {
                    st.log_off = std::log(job.x0);
                }
                st.mult = std::exp(g * st.log_off) * inv_gamma;
                if (job.has_rule) st.thresh = ln_s[j] - st.log_off;
                st.acc += 0.5 * dt * st.mult;
                st.cursor = 0;
                states[j] = st;
            }

            Xoshiro256pp rng = Xoshiro256pp::for_path(cfg.seed, p);
            double carry = 0.0;  // sum of normals over previous chunks
            double base_end = 1.0;

            for (long long k_lo = 1; k_lo <= n_steps; k_lo += kChunkNormals) {
                const long long k_hi = std::min(n_steps, k_lo + kChunkNormals - 1);
                const int len = static_cast<int>(k_hi - k_lo + 1);
                fill_normals(rng, z.data(), len);

                // Normals to in-place prefix sums; four lanes break the
                // serial carry chain enough for the loop to pipeline.
                {
                    double run = 0.0;
                    int i = 0;
                    for (; i + 4 <= len; i += 4) {
                        const double s0 = z[i];
                        const double s1 = s0 + z[i + 1];
                        const double s2 = s1 + z[i + 2];
                        const double s3 = s2 + z[i + 3];
                        z[i] = run + s0;
                        z[i + 1] = run + s1;
                        z[i + 2] = run + s2;
                        z[i + 3] = run + s3;
                        run += s3;
                    }
                    for (; i < len; ++i) {
                        run += z[i];
                        z[i] = run;
                    }
                }

                const double cum0 = a * double(k_lo) + b * carry;
                for (int i = 0; i < len; ++i) cum[i] = cum0 + a * double(i) + b * z[i];
                carry += z[len - 1];

                const double exp0 = -rdt * double(k_lo);
                for (int i = 0; i < len; ++i) base[i] = g * cum[i] + exp0 - rdt * double(i);
                for (int i = 0; i < len; ++i) base[i] = std::exp(base[i]);

                {
                    double run = 0.0;
                    int i = 0;
                    for (; i + 4 <= len; i += 4) {
                        const double s0 = base[i];
                        const double s1 = s0 + base[i + 1];
                        const double s2 = s1 + base[i + 2];
                        const double s3 = s2 + base[i + 3];
                        psl[i] = dt * (run + s0);
                        psl[i + 1] = dt * (run + s1);
                        psl[i + 2] = dt * (run + s2);
                        psl[i + 3] = dt * (run + s3);
                        run += s3;
                    }
                    for (; i < len; ++i) {
                        run += base[i];
                        psl[i] = dt * run;
                    }
                }

                const int n_blocks = (len + kBlock - 1) / kBlock;
                for (int m = 0; m < n_blocks; ++m) {
                    const int b_lo = m * kBlock;
                    const int b_hi = std::min(len, b_lo + kBlock);
                    double mn = cum[b_lo];
                    for (int i = b_lo + 1; i < b_hi; ++i) mn = std::min(mn, cum[i]);
                    block_min[m] = mn;
                }

                // Trapezoid weight dt*base over an inclusive global range.
                const auto slice = [&](long long from_g, long long to_g) {
                    const int fi = static_cast<int>(from_g - k_lo);
                    const int ti = static_cast<int>(to_g - k_lo);
                    return psl[ti] - (fi > 0 ? psl[fi - 1] : 0.0);
                };
                // First global step in [from_g, to_g] with cum <= thresh.
                const auto find_trigger = [&](long long from_g, long long to_g,
                                              double thresh) -> long long {
                    if (from_g > to_g) return -1;
                    int i = static_cast<int>(from_g - k_lo);
                    const int end = static_cast<int>(to_g - k_lo);
                    while (i <= end) {
                        const int m = i / kBlock;
                        const int blk_end = std::min((m + 1) * kBlock - 1, end);
                        if (block_min[m] <= thresh) {
                            for (; i <= blk_end; ++i)
                                if (cum[i] <= thresh) return k_lo + i;
                        } else {
                            i = blk_end + 1;
                        }
                    }
                    return -1;
                };

                const long long last_trigger_step = std::min(k_hi, n_steps - 1);
                for (std::size_t j = 0; j < n_jobs; ++j) {
                    JobState& st = states[j];
                    long long from = std::max(st.cursor + 1, k_lo);
                    while (from <= k_hi) {
                        long long trig = -1;
                        if (st.has_rule)
                            trig = find_trigger(from, last_trigger_step, st.thresh);
                        if (trig < 0) {
                            st.acc += st.mult * slice(from, k_hi);
                            st.cursor = k_hi;
                            break;
                        }
                        st.acc += st.mult * slice(from, trig);
                        const int ti = static_cast<int>(trig - k_lo);
                        const double base_k = base[ti];
                        const double cum_k = cum[ti];
                        const double x_k = std::exp(st.log_off + cum_k);
                        const double disc_k = std::exp(-rdt * double(trig));
                        st.acc -= 0.5 * dt * base_k * st.mult;
                        st.acc -= disc_k * (spec.c0 * (jobs[j].S - x_k) + spec.c1);
                        st.log_off = ln_S[j] - cum_k;
                        st.mult = std::exp(g * st.log_off) * inv_gamma;
                        st.thresh = ln_s[j] - st.log_off;
                        st.acc += 0.5 * dt * base_k * st.mult;
                        st.cursor = trig;
                        from = trig + 1;
                    }
                }

                base_end = base[len - 1];
            }

            for (std::size_t j = 0; j < n_jobs; ++j) {
                states[j].acc -= 0.5 * dt * base_end * states[j].mult;
                payoffs[j][static_cast<std::size_t>(p)] = states[j].acc;
            }
        }
    });
}

}  // namespace impulse::detail
