#include "impulse/simulation.hpp"

#include "json.hpp"
#include "sim_detail.hpp"
#include "sim_rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <locale>
#include <ostream>

namespace impulse {

double step_exact(double x, double dt, double z, const ProblemSpec& spec) {
    return x * std::exp((spec.nu - 0.5 * spec.sigma * spec.sigma) * dt +
                        spec.sigma * std::sqrt(dt) * z);
}

double step_euler(double x, double dt, double z, const ProblemSpec& spec) {
    const double next = x * (1.0 + spec.nu * dt + spec.sigma * std::sqrt(dt) * z);
    return std::max(next, 0.0);
}

namespace detail {

PayoffEstimate estimate_from_payoffs(const std::vector<double>& payoffs, double trunc) {
    PayoffEstimate est;
    est.n_paths = static_cast<long long>(payoffs.size());
    est.truncation_bound = trunc;
    double sum = 0.0;
    for (double p : payoffs) {
        if (!std::isfinite(p)) throw SimulationError("non-finite path payoff");
        sum += p;
    }
    est.mean = sum / double(est.n_paths);
    if (est.n_paths > 1) {
        double ss = 0.0;
        for (double p : payoffs) ss += (p - est.mean) * (p - est.mean);
        est.std_error = std::sqrt(ss / (double(est.n_paths - 1) * double(est.n_paths)));
    }
    return est;
}

}  // namespace detail

static void require_valid(const ProblemSpec& spec) {
    const ValidationReport report = validate(spec);
    if (!report.passed) throw ValidationError(report);
}

PayoffEstimate run_policy(const ProblemSpec& spec, const ImpulsePolicy& policy,
                          const SimConfig& cfg) {
    require_valid(spec);
    detail::validate_config(cfg);
    detail::validate_policy(policy);

    std::vector<double> payoffs(static_cast<std::size_t>(cfg.n_paths), 0.0);
    detail::parallel_for_paths(cfg.n_paths, [&](long long lo, long long hi) {
        detail::NullObserver obs;
        for (long long p = lo; p < hi; ++p)
            payoffs[static_cast<std::size_t>(p)] = detail::run_single_path(spec, policy, cfg, p, obs);
    });
    return detail::estimate_from_payoffs(payoffs, detail::truncation_bound(spec, policy, cfg));
}

std::vector<PayoffEstimate> run_policies_crn(const ProblemSpec& spec,
                                             const std::vector<ImpulsePolicy>& policies,
                                             const SimConfig& cfg) {
    require_valid(spec);
    detail::validate_config(cfg);
    if (cfg.scheme != Scheme::exact_gbm)
        throw SimulationError("common-noise batch supports only the exact scheme");

    std::vector<detail::BatchJob> jobs;
    jobs.reserve(policies.size());
    for (const auto& policy : policies) {
        detail::validate_policy(policy);
        detail::BatchJob job;
        job.x0 = cfg.x0;
        if (const auto* rule = std::get_if<SsRule>(&policy)) {
            job.has_rule = true;
            job.s = rule->s;
            job.S = rule->S;
        } else if (!std::holds_alternative<NullPolicy>(policy)) {
            throw SimulationError(
                "common-noise batch supports only trigger-target and null policies");
        }
        jobs.push_back(job);
    }

    std::vector<std::vector<double>> payoffs(jobs.size());
    for (auto& column : payoffs) column.assign(static_cast<std::size_t>(cfg.n_paths), 0.0);
    detail::batch_run_crn(spec, jobs, cfg, payoffs);

    std::vector<PayoffEstimate> out;
    out.reserve(jobs.size());
    for (std::size_t j = 0; j < jobs.size(); ++j)
        out.push_back(detail::estimate_from_payoffs(
            payoffs[j], detail::truncation_bound(spec, policies[j], cfg)));
    return out;
}

namespace {

struct TraceObserver {
    std::ostream* os;
    long long path;
    void on_point(double t, double x, bool jumped) {
        *os << path << ',' << t << ',' << x << ',' << (jumped ? 1 : 0) << '\n';
    }
};

}  // namespace

void write_trace_csv(const ProblemSpec& spec, const ImpulsePolicy& policy, const SimConfig& cfg,
                     std::ostream& os, int max_paths) {
    require_valid(spec);
    detail::validate_config(cfg);
    detail::validate_policy(policy);

    const auto old_loc = os.getloc();
    const auto old_prec = os.precision();
    os.imbue(std::locale::classic());
    os << std::setprecision(17);  // round-trips doubles exactly

    os << "path,t,x,impulse_flag\n";
    const long long n = std::min<long long>(std::clamp(max_paths, 0, 10), cfg.n_paths);
    for (long long p = 0; p < n; ++p) {
        TraceObserver obs{&os, p};
        detail::run_single_path(spec, policy, cfg, p, obs);
    }

    os.precision(old_prec);
    os.imbue(old_loc);
}

MomentCheckResult moment_growth_check(const ProblemSpec& spec, const SimConfig& cfg, double x,
                                      double y) {
    require_valid(spec);
    detail::validate_config(cfg);
    if (!(x > 0.0) || !(y > 0.0))
        throw SimulationError("moment check requires positive start points");

    constexpr std::array<double, 3> kTimes = {0.5, 1.0, 2.0};
    const std::size_t n_paths = static_cast<std::size_t>(cfg.n_paths);
    const double diff = x - y;
    const double denom = diff * diff * diff * diff;

    // Checkpoint grid times. Exact sampling jumps checkpoint to checkpoint;
    // Euler walks the cfg.dt grid, so checkpoints land on the nearest step.
    std::array<double, 3> t_eff = kTimes;
    std::array<long long, 3> step_at = {1, 2, 3};
    if (cfg.scheme == Scheme::euler) {
        long long prev = 1;
        for (std::size_t c = 0; c < kTimes.size(); ++c) {
            step_at[c] = std::max(prev, std::llround(kTimes[c] / cfg.dt));
            t_eff[c] = double(step_at[c]) * cfg.dt;
            prev = step_at[c] + 1;
        }
    }

    // ratios[c][p] holds |X^x_t - X^y_t|^4 / |x - y|^4 for path p.
    std::array<std::vector<double>, 3> ratios;
    for (auto& column : ratios) column.assign(n_paths, 0.0);

    if (denom > 0.0) {
        detail::parallel_for_paths(cfg.n_paths, [&](long long lo, long long hi) {
            if (cfg.scheme == Scheme::exact_gbm) {
                const std::array<double, 3> durations = {0.5, 0.5, 1.0};
                double z[3];
                for (long long p = lo; p < hi; ++p) {
                    detail::Xoshiro256pp rng = detail::Xoshiro256pp::for_path(cfg.seed, p);
                    detail::fill_normals(rng, z, 3);
                    double xa = x;
                    double xb = y;
                    for (std::size_t c = 0; c < durations.size(); ++c) {
                        xa = step_exact(xa, durations[c], z[c], spec);
                        xb = step_exact(xb, durations[c], z[c], spec);
                        const double d = xa - xb;
                        ratios[c][static_cast<std::size_t>(p)] = d * d * d * d / denom;
                    }
                }
            } else {
                const long long n_steps = step_at[2];
                double z_buf[detail::kChunkNormals];
                for (long long p = lo; p < hi; ++p) {
                    detail::Xoshiro256pp rng = detail::Xoshiro256pp::for_path(cfg.seed, p);
                    double xa = x;
                    double xb = y;
                    long long remaining = n_steps;
                    long long k = 0;
                    std::size_t c = 0;
                    while (remaining > 0) {
                        const int chunk =
                            static_cast<int>(std::min<long long>(detail::kChunkNormals, remaining));
                        detail::fill_normals(rng, z_buf, chunk);
                        remaining -= chunk;
                        for (int i = 0; i < chunk; ++i) {
                            ++k;
                            xa = step_euler(xa, cfg.dt, z_buf[i], spec);
                            xb = step_euler(xb, cfg.dt, z_buf[i], spec);
                            while (c < step_at.size() && step_at[c] == k) {
                                const double d = xa - xb;
                                ratios[c][static_cast<std::size_t>(p)] = d * d * d * d / denom;
                                ++c;
                            }
                        }
                    }
                }
            }
        });
    }

    const double growth_rate = 4.0 * std::abs(spec.nu) + 6.0 * spec.sigma * spec.sigma;
    MomentCheckResult result;
    result.passed = true;
    for (std::size_t c = 0; c < kTimes.size(); ++c) {
        MomentCheckpoint cp;
        cp.t = t_eff[c];
        cp.bound = std::exp(growth_rate * cp.t);
        if (denom > 0.0) {
            const PayoffEstimate stats = detail::estimate_from_payoffs(ratios[c], 0.0);
            cp.ratio = stats.mean;
            cp.rel_stderr = stats.mean > 0.0 ? stats.std_error / stats.mean : 0.0;
        }
        cp.passed = cp.ratio <= cp.bound * (1.0 + 5.0 * cp.rel_stderr);
        result.passed = result.passed && cp.passed;
        result.checkpoints.push_back(cp);
    }
    return result;
}

std::string estimate_to_json(const PayoffEstimate& est) {
    nlohmann::ordered_json j;
    j["mean"] = est.mean;
    j["stderr"] = est.std_error;
    j["n_paths"] = est.n_paths;
    j["truncation_bound"] = est.truncation_bound;
    return j.dump();
}

}  // namespace impulse
