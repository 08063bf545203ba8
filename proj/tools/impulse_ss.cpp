#include "CLI11.hpp"
#include "json.hpp"

#include "impulse/gbm_primitives.hpp"
#include "impulse/policy_solver.hpp"
#include "impulse/problem_spec.hpp"
#include "impulse/simulation.hpp"
#include "impulse/value_function.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace impulse;
using nlohmann::ordered_json;

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitCheck = 4;
constexpr int kExitSimulation = 5;

std::string fmt(double v, int precision = 12) {
    std::ostringstream ss;
    ss.imbue(std::locale::classic());
    ss << std::setprecision(precision) << v;
    return ss.str();
}

/// Fixed 4-decimal printing used by the table-style outputs.
std::string fmt4(double v) {
    std::ostringstream ss;
    ss.imbue(std::locale::classic());
    ss << std::fixed << std::setprecision(4) << v;
    return ss.str();
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> xs;
    xs.reserve(n);
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        xs.push_back(std::exp(llo + (lhi - llo) * double(i) / double(n - 1)));
    return xs;
}

/// The six parameter flags plus --spec FILE, mutually exclusive alternatives.
struct SpecFlags {
    ProblemSpec spec{};
    std::string path;
    std::array<CLI::Option*, 6> opts{};
    CLI::Option* path_opt = nullptr;
};

void add_spec_flags(CLI::App* cmd, SpecFlags& f) {
    f.opts[0] = cmd->add_option("--rho", f.spec.rho, "discount rate");
    f.opts[1] = cmd->add_option("--nu", f.spec.nu, "drift coefficient");
    f.opts[2] = cmd->add_option("--sigma", f.spec.sigma, "volatility coefficient");
    f.opts[3] = cmd->add_option("--gamma", f.spec.gamma, "reward exponent in (0,1)");
    f.opts[4] = cmd->add_option("--c0", f.spec.c0, "proportional intervention cost");
    f.opts[5] = cmd->add_option("--c1", f.spec.c1, "fixed intervention cost");
    f.path_opt = cmd->add_option("--spec", f.path, "JSON file with the six parameters");
    for (auto* o : f.opts) f.path_opt->excludes(o);
}

ProblemSpec resolve_spec(const SpecFlags& f) {
    if (f.path_opt->count() > 0) {
        std::ifstream in(f.path);
        if (!in) throw std::invalid_argument("cannot open spec file: " + f.path);
        std::stringstream buf;
        buf << in.rdbuf();
        return spec_from_json(buf.str());
    }
    for (auto* o : f.opts)
        if (o->count() == 0)
            throw std::invalid_argument("missing parameter flag " + o->get_name() +
                                        " (pass all six or use --spec FILE)");
    return f.spec;
}

int cmd_validate(const SpecFlags& flags, bool json) {
    const ProblemSpec spec = resolve_spec(flags);
    const ValidationReport rep = validate(spec);
    if (json) {
        ordered_json j;
        j["passed"] = rep.passed;
        auto arr = ordered_json::array();
        for (const auto& [name, detail] : rep.violations)
            arr.push_back(ordered_json{{"assumption", name}, {"detail", detail}});
        j["violations"] = arr;
        j["viable"] = rep.viable;
        j["c1"] = rep.c1;
        j["vhat_star_c0"] =
            std::isfinite(rep.vhat_star_c0) ? ordered_json(rep.vhat_star_c0) : ordered_json(nullptr);
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "passed: " << (rep.passed ? "yes" : "no") << "\n";
        for (const auto& [name, detail] : rep.violations)
            std::cout << "violation: " << name << ": " << detail << "\n";
        if (rep.passed)
            std::cout << "viable: " << (rep.viable ? "yes" : "no") << " (c1=" << fmt(rep.c1)
                      << " vs vhat*(c0)=" << fmt(rep.vhat_star_c0) << ")\n";
    }
    return rep.passed ? 0 : kExitValidation;
}

struct Derived {
    double spread, v0, vs, vS;
};

Derived derive_columns(const ProblemSpec& spec, const ValueFunction& vf, const PolicyTriple& t) {
    const double vS = eval(vf, t.S);
    return Derived{t.S - t.s, vS - spec.c0 * t.S - spec.c1, eval(vf, t.s), vS};
}

int cmd_solve(const SpecFlags& flags, bool json) {
    const ProblemSpec spec = resolve_spec(flags);
    const SolveOutcome outcome = solve(spec);
    if (is_never_invest(outcome)) {
        if (json)
            std::cout << ordered_json{{"outcome", ordered_json::parse(outcome_to_json(outcome))}}
                             .dump()
                      << "\n";
        else
            std::cout << outcome_to_json(outcome) << "\n";
        return 0;
    }
    const auto t = std::get<PolicyTriple>(outcome);
    const ValueFunction vf{GbmPrimitives::build(spec), outcome};
    const Derived d = derive_columns(spec, vf, t);
    if (json) {
        ordered_json j;
        j["outcome"] = ordered_json::parse(outcome_to_json(outcome));
        j["derived"] = ordered_json{
            {"spread", d.spread}, {"v0", d.v0}, {"vs", d.vs}, {"vS", d.vS}};
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "B,s,S,spread,v0,vs,vS\n"
                  << fmt4(t.B) << ',' << fmt4(t.s) << ',' << fmt4(t.S) << ',' << fmt4(d.spread)
                  << ',' << fmt4(d.v0) << ',' << fmt4(d.vs) << ',' << fmt4(d.vS) << "\n";
    }
    return 0;
}

ProblemSpec with_param(ProblemSpec spec, const std::string& name, double value) {
    if (name == "sigma")
        spec.sigma = value;
    else if (name == "c1")
        spec.c1 = value;
    else if (name == "rho")
        spec.rho = value;
    else if (name == "nu")
        spec.nu = value;
    else if (name == "gamma")
        spec.gamma = value;
    else
        spec.c0 = value;
    return spec;
}

int cmd_sweep(const SpecFlags& flags, const std::string& param, const std::vector<double>& values,
              bool json) {
    const ProblemSpec base = resolve_spec(flags);
    ordered_json rows = ordered_json::array();
    if (!json) std::cout << "param,B,s,S,spread,v0,vs,vS\n";
    for (double value : values) {
        const ProblemSpec spec = with_param(base, param, value);
        try {
            const SolveOutcome outcome = solve(spec);
            if (is_never_invest(outcome)) {
                std::cerr << "sweep " << param << "=" << fmt(value)
                          << ": not viable, never-invest\n";
                if (json)
                    rows.push_back(ordered_json{{"param", value}, {"kind", "never_invest"}});
                else
                    std::cout << fmt4(value) << ",NA,NA,NA,NA,NA,NA,NA\n";
                continue;
            }
            const auto t = std::get<PolicyTriple>(outcome);
            const ValueFunction vf{GbmPrimitives::build(spec), outcome};
            const Derived d = derive_columns(spec, vf, t);
            if (json)
                rows.push_back(ordered_json{{"param", value},
                                            {"kind", "triple"},
                                            {"B", t.B},
                                            {"s", t.s},
                                            {"S", t.S},
                                            {"spread", d.spread},
                                            {"v0", d.v0},
                                            {"vs", d.vs},
                                            {"vS", d.vS}});
            else
                std::cout << fmt4(value) << ',' << fmt4(t.B) << ',' << fmt4(t.s) << ','
                          << fmt4(t.S) << ',' << fmt4(d.spread) << ',' << fmt4(d.v0) << ','
                          << fmt4(d.vs) << ',' << fmt4(d.vS) << "\n";
        } catch (const std::exception& e) {
            std::cerr << "sweep " << param << "=" << fmt(value) << ": " << e.what() << "\n";
            if (json)
                rows.push_back(ordered_json{{"param", value}, {"error", e.what()}});
            else
                std::cout << fmt4(value) << ",NA,NA,NA,NA,NA,NA,NA\n";
        }
    }
    if (json) std::cout << rows.dump() << "\n";
    return 0;
}

struct Property {
    std::string name;
    bool passed = false;
    double worst = 0.0;
    double location = 0.0;
};

/// Runs the verification grid on an assembled value function. Grid points
/// colliding with the trigger boundary are skipped (the residual evaluator
/// refuses the kink).
std::vector<Property> run_checks(const ProblemSpec& spec, const ValueFunction& vf) {
    std::vector<Property> props;
    const bool never = is_never_invest(vf.outcome);
    const std::vector<double> xs = log_grid(1e-2, 1e4, 500);

    double trigger = -1.0;
    if (!never) {
        const auto t = std::get<PolicyTriple>(vf.outcome);
        trigger = t.s;

        const double action_limit =
            t.B * phi(vf.prims, t.S) + vhat(vf.prims, t.S) - spec.c0 * (t.S - t.s) - spec.c1;
        const double cont_limit = t.B * phi(vf.prims, t.s) + vhat(vf.prims, t.s);
        const double paste = std::abs(action_limit - cont_limit) / std::max(1.0, spec.c0);
        props.push_back({"value pasting at s", paste < 1e-9, paste, t.s});

        const SmoothFitReport fit = smooth_fit_report(vf);
        const bool fit_s_worse = std::abs(fit.d_at_s) >= std::abs(fit.d_at_S);
        props.push_back({"smooth fit (v' = c0 at s and S)",
                         std::abs(fit.d_at_s) < 1e-8 && std::abs(fit.d_at_S) < 1e-8,
                         fit_s_worse ? fit.d_at_s : fit.d_at_S, fit_s_worse ? t.s : t.S});
    }

    Property cont_src{"continuation: Lv - f = 0", true, 0.0, xs.front()};
    Property cont_gain{"continuation: v - Mv >= 0", true, 1e300, xs.front()};
    Property act_src{"action: Lv - f >= 0", true, 1e300, xs.front()};
    Property act_gain{"action: v - Mv = 0", true, 0.0, xs.front()};
    Property growth{"growth bound v <= f*(a)/rho + a*x/rho", true, -1e300, xs.front()};
    Property mono{"v nondecreasing", true, 1e300, xs.front()};
    Property single_switch{"v' single switch (rise then fall)", true, 0.0, xs.front()};

    const double alpha = spec.c0 * spec.rho;
    const double fstar = reward_fenchel(spec.gamma, alpha);
    bool have_action = false;
    double prev_v = -1e300;
    double prev_d1 = 0.0;
    bool seen_prev_d1 = false;
    int dir = 0;  // +1 while v' rises, -1 after it falls
    int switches = 0;
    for (double x : xs) {
        if (x == trigger) continue;
        const QviResidual r = qvi_residual(vf, x);
        const double f_x = std::pow(x, spec.gamma) / spec.gamma;
        if (never || x > trigger) {
            const double rel = std::abs(r.lv_minus_f) / (1.0 + std::abs(f_x));
            if (rel > cont_src.worst) cont_src = {cont_src.name, rel < 1e-9, rel, x};
            if (r.v_minus_Mv < cont_gain.worst)
                cont_gain = {cont_gain.name, true, r.v_minus_Mv, x};
        } else {
            have_action = true;
            if (r.lv_minus_f < act_src.worst) act_src = {act_src.name, true, r.lv_minus_f, x};
            const double gainabs = std::abs(r.v_minus_Mv);
            if (gainabs > act_gain.worst) act_gain = {act_gain.name, gainabs < 1e-9, gainabs, x};
        }

        const double v_x = eval(vf, x);
        const double bound = fstar / spec.rho + alpha * x / spec.rho;
        const double margin = (v_x - bound) / std::max(1.0, std::abs(bound));
        if (margin > growth.worst) growth = {growth.name, true, margin, x};

        if (prev_v > -1e300 && v_x - prev_v < mono.worst)
            mono = {mono.name, true, v_x - prev_v, x};
        prev_v = v_x;

        const double d1 = eval_d1(vf, x);
        if (seen_prev_d1) {
            const double diff = d1 - prev_d1;
            const double tol = 1e-12 * std::max(1.0, std::abs(d1));
            const int sign = diff > tol ? 1 : (diff < -tol ? -1 : 0);
            if (sign != 0 && sign != dir) {
                if (dir != 0) ++switches;
                if (dir == -1 && sign == 1) {
                    single_switch.passed = false;
                    single_switch.location = x;
                }
                dir = sign;
            }
        }
        prev_d1 = d1;
        seen_prev_d1 = true;
    }
    cont_src.passed = cont_src.worst < 1e-9;
    cont_gain.passed = never ? cont_gain.worst > 0.0 : cont_gain.worst >= -1e-9;
    growth.passed = growth.worst <= 1e-9;
    mono.passed = mono.worst >= -1e-9;
    single_switch.worst = double(switches);
    if (switches > 1) single_switch.passed = false;

    props.push_back(cont_src);
    props.push_back(cont_gain);
    if (have_action) {
        act_src.passed = act_src.worst >= -1e-9;
        act_gain.passed = act_gain.worst < 1e-9;
        props.push_back(act_src);
        props.push_back(act_gain);
    }
    props.push_back(growth);
    props.push_back(mono);
    props.push_back(single_switch);
    return props;
}

int cmd_check(const SpecFlags& flags, const CLI::Option* override_opt, double override_B,
              bool json) {
    const ProblemSpec spec = resolve_spec(flags);
    SolveOutcome outcome = solve(spec);
    if (override_opt->count() > 0) {
        if (is_never_invest(outcome))
            throw std::invalid_argument("--override-B requires a solvable (viable) spec");
        auto t = std::get<PolicyTriple>(outcome);
        t.B = override_B;
        outcome = t;
    }
    if (is_never_invest(outcome))
        std::cerr << "not viable: checking the no-intervention value function\n";
    const ValueFunction vf{GbmPrimitives::build(spec), outcome};
    const std::vector<Property> props = run_checks(spec, vf);

    bool all_passed = true;
    for (const auto& p : props) all_passed = all_passed && p.passed;
    if (json) {
        ordered_json arr = ordered_json::array();
        for (const auto& p : props)
            arr.push_back(ordered_json{{"name", p.name},
                                       {"passed", p.passed},
                                       {"worst", p.worst},
                                       {"location", p.location}});
        std::cout << ordered_json{{"passed", all_passed}, {"properties", arr}}.dump() << "\n";
    } else {
        for (const auto& p : props)
            std::cout << p.name << ": " << (p.passed ? "PASS" : "FAIL")
                      << " worst=" << fmt(p.worst, 6) << " at x=" << fmt(p.location, 6) << "\n";
    }
    return all_passed ? 0 : kExitCheck;
}

void print_estimate(const char* label, const PayoffEstimate& e) {
    std::cout << label << ": mean=" << fmt(e.mean) << " stderr=" << fmt(e.std_error)
              << " n_paths=" << e.n_paths << " truncation_bound=" << fmt(e.truncation_bound)
              << "\n";
}

int cmd_simulate(const SpecFlags& flags, const SimConfig& cfg, bool json) {
    const ProblemSpec spec = resolve_spec(flags);
    const SolveOutcome outcome = solve(spec);
    const ValueFunction vf{GbmPrimitives::build(spec), outcome};
    const double vhat_x0 = vhat(vf.prims, cfg.x0);

    if (is_never_invest(outcome)) {
        std::cerr << "not viable: the optimal policy never intervenes; "
                     "simulating the no-intervention baseline only\n";
        const auto ests = run_policies_crn(spec, {NullPolicy{}}, cfg);
        if (json) {
            ordered_json j;
            j["null"] = ordered_json::parse(estimate_to_json(ests[0]));
            j["vhat"] = vhat_x0;
            j["gap_null"] = ests[0].mean - vhat_x0;
            std::cout << j.dump() << "\n";
        } else {
            print_estimate("null", ests[0]);
            std::cout << "closed_form_vhat: " << fmt(vhat_x0) << "\n";
            std::cout << "gap_null: " << fmt(ests[0].mean - vhat_x0) << "\n";
        }
        return 0;
    }

    const auto t = std::get<PolicyTriple>(outcome);
    const double v_x0 = eval(vf, cfg.x0);
    const auto ests = run_policies_crn(spec, {SsRule{t.s, t.S}, NullPolicy{}}, cfg);
    if (json) {
        ordered_json j;
        j["optimal"] = ordered_json::parse(estimate_to_json(ests[0]));
        j["v"] = v_x0;
        j["gap_optimal"] = ests[0].mean - v_x0;
        j["null"] = ordered_json::parse(estimate_to_json(ests[1]));
        j["vhat"] = vhat_x0;
        j["gap_null"] = ests[1].mean - vhat_x0;
        std::cout << j.dump() << "\n";
    } else {
        print_estimate("optimal", ests[0]);
        std::cout << "closed_form_v: " << fmt(v_x0) << "\n";
        std::cout << "gap_optimal: " << fmt(ests[0].mean - v_x0) << "\n";
        print_estimate("null", ests[1]);
        std::cout << "closed_form_vhat: " << fmt(vhat_x0) << "\n";
        std::cout << "gap_null: " << fmt(ests[1].mean - vhat_x0) << "\n";
    }
    return 0;
}

int cmd_dump_grid(const SpecFlags& flags, double lo, double hi, int points) {
    const ProblemSpec spec = resolve_spec(flags);
    const ValueFunction vf{GbmPrimitives::build(spec), solve(spec)};
    write_grid_csv(vf, std::cout, lo, hi, points);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trigger-target impulse control: solve, verify, and simulate"};
    app.require_subcommand(1);
    int rc = 0;

    SpecFlags f_validate;
    bool j_validate = false;
    auto* c_validate = app.add_subcommand("validate", "check the standing assumptions");
    add_spec_flags(c_validate, f_validate);
    c_validate->add_flag("--json", j_validate, "JSON output");
    c_validate->callback([&] { rc = cmd_validate(f_validate, j_validate); });

    SpecFlags f_solve;
    bool j_solve = false;
    auto* c_solve = app.add_subcommand("solve", "solve the smooth-pasting system");
    add_spec_flags(c_solve, f_solve);
    c_solve->add_flag("--json", j_solve, "JSON output");
    c_solve->callback([&] { rc = cmd_solve(f_solve, j_solve); });

    SpecFlags f_sweep;
    bool j_sweep = false;
    std::string sweep_param;
    std::vector<double> sweep_values;
    auto* c_sweep = app.add_subcommand("sweep", "solve across one varying parameter (CSV)");
    add_spec_flags(c_sweep, f_sweep);
    c_sweep->add_option("--param", sweep_param, "parameter to vary")
        ->required()
        ->check(CLI::IsMember({"sigma", "c1", "rho", "nu", "gamma", "c0"}));
    c_sweep->add_option("--values", sweep_values, "comma-separated parameter values")
        ->delimiter(',');
    c_sweep->add_flag("--json", j_sweep, "JSON output (full precision)");
    c_sweep->callback([&] { rc = cmd_sweep(f_sweep, sweep_param, sweep_values, j_sweep); });

    SpecFlags f_check;
    bool j_check = false;
    double override_B = 0.0;
    auto* c_check = app.add_subcommand("check", "verify the variational inequality on a grid");
    add_spec_flags(c_check, f_check);
    auto* o_override =
        c_check->add_option("--override-B", override_B, "replace the solved coefficient B");
    c_check->add_flag("--json", j_check, "JSON output");
    c_check->callback([&] { rc = cmd_check(f_check, o_override, override_B, j_check); });

    SpecFlags f_sim;
    bool j_sim = false;
    SimConfig sim_cfg;
    sim_cfg.x0 = 20.0;
    sim_cfg.n_paths = 20000;
    sim_cfg.dt = 1e-3;
    sim_cfg.horizon = 60.0;
    sim_cfg.seed = 42;
    auto* c_sim = app.add_subcommand(
        "simulate", "Monte-Carlo payoff of the optimal rule and the no-intervention baseline");
    add_spec_flags(c_sim, f_sim);
    c_sim->add_option("--x0", sim_cfg.x0, "initial state");
    c_sim->add_option("--n-paths", sim_cfg.n_paths, "number of paths");
    c_sim->add_option("--dt", sim_cfg.dt, "time step");
    c_sim->add_option("--horizon", sim_cfg.horizon, "truncation time");
    c_sim->add_option("--seed", sim_cfg.seed, "random seed");
    c_sim->add_flag("--json", j_sim, "JSON output");
    c_sim->callback([&] { rc = cmd_simulate(f_sim, sim_cfg, j_sim); });

    SpecFlags f_grid;
    double grid_min = 1e-2, grid_max = 1e4;
    int grid_points = 500;
    auto* c_grid = app.add_subcommand("dump-grid", "value function and residuals as CSV");
    add_spec_flags(c_grid, f_grid);
    c_grid->add_option("--grid-min", grid_min, "smallest grid point");
    c_grid->add_option("--grid-max", grid_max, "largest grid point");
    c_grid->add_option("--grid-points", grid_points, "number of log-spaced points");
    c_grid->callback([&] { rc = cmd_dump_grid(f_grid, grid_min, grid_max, grid_points); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "validation failed: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << " (bracket [" << e.bracket_lo << ", "
                  << e.bracket_hi << "])\n";
        return kExitSolver;
    } catch (const SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return kExitSimulation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
