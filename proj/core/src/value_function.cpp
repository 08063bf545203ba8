#include "impulse/value_function.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace impulse {

namespace {

void require_positive_state(double x) {
    if (!(x > 0.0)) throw std::domain_error("value function requires x > 0");
}

// Golden-section maximization of a unimodal function on [a, b]; returns the
// located maximizer. Kept as the fallback for the intervention operator when
// no interior analytic maximizer exists.
template <class F>
double golden_section_argmax(F&& f, double a, double b) {
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while ((b - a) > 1e-13 * std::max(1.0, std::abs(a) + std::abs(b))) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

double reward(const ProblemSpec& spec, double x) {
    return std::pow(x, spec.gamma) / spec.gamma;
}

}  // namespace

ValueFunction make_value_function(const ProblemSpec& spec, const SolverConfig& cfg) {
    ValueFunction vf{GbmPrimitives::build(spec), solve(spec, cfg)};
    return vf;
}

double eval(const ValueFunction& vf, double x) {
    require_positive_state(x);
    if (const auto* t = std::get_if<PolicyTriple>(&vf.outcome)) {
        if (x <= t->s) {
            const double at_target = t->B * phi(vf.prims, t->S) + vhat(vf.prims, t->S);
            return at_target - vf.prims.spec.c0 * (t->S - x) - vf.prims.spec.c1;
        }
        return t->B * phi(vf.prims, x) + vhat(vf.prims, x);
    }
    return vhat(vf.prims, x);
}

double eval_d1(const ValueFunction& vf, double x) {
    require_positive_state(x);
    if (const auto* t = std::get_if<PolicyTriple>(&vf.outcome)) {
        if (x <= t->s) return vf.prims.spec.c0;
        return t->B * phi_d1(vf.prims, x) + vhat_d1(vf.prims, x);
    }
    return vhat_d1(vf.prims, x);
}

double intervention_Mv(const ValueFunction& vf, double x) {
    require_positive_state(x);
    const double c0 = vf.prims.spec.c0;
    const double c1 = vf.prims.spec.c1;

    if (const auto* t = std::get_if<PolicyTriple>(&vf.outcome)) {
        // v' = c0 exactly at S and v' is quasiconcave, so for x < S the
        // supremum over jump targets is attained at S; beyond S the payoff
        // of a jump of size i decreases in i and the supremum is the
        // i -> 0+ limit.
        if (x < t->S) return eval(vf, t->S) - c0 * (t->S - x) - c1;
        return eval(vf, x) - c1;
    }

    // Never-invest value: vhat is strictly concave with vhat'(x*) = c0 at
    // the Fenchel maximizer x*.
    const double x_star = vhat_fenchel_argmax(vf.prims, c0);
    if (x < x_star) return vhat(vf.prims, x_star) - c0 * (x_star - x) - c1;

    // No interior maximizer: fall back to a bounded golden-section search.
    // vhat(y) - c0*y is strictly decreasing past x*, so any finite upper
    // bound works; the search collapses to the left edge.
    const double ub = 2.0 * x + x_star;
    const double y = golden_section_argmax(
        [&](double target) { return vhat(vf.prims, target) - c0 * (target - x); }, x, ub);
    return vhat(vf.prims, y) - c0 * (y - x) - c1;
}

QviResidual qvi_residual(const ValueFunction& vf, double x) {
    require_positive_state(x);
    const ProblemSpec& spec = vf.prims.spec;

    QviResidual r;
    if (const auto* t = std::get_if<PolicyTriple>(&vf.outcome)) {
        if (x == t->s)
            throw std::invalid_argument(
                "qvi_residual refused at x = s: v'' jumps across the boundary");
        if (x < t->s) {
            // Affine branch: v'' = 0 and v' = c0.
            r.lv_minus_f = spec.rho * eval(vf, x) - spec.nu * x * spec.c0 - reward(spec, x);
        } else {
            const double v = eval(vf, x);
            const double d1 = eval_d1(vf, x);
            const double d2 = t->B * phi_d2(vf.prims, x) + vhat_d2(vf.prims, x);
            r.lv_minus_f = spec.rho * v - spec.nu * x * d1 -
                           0.5 * spec.sigma * spec.sigma * x * x * d2 - reward(spec, x);
        }
    } else {
        const double d2 = vhat_d2(vf.prims, x);
        r.lv_minus_f = spec.rho * eval(vf, x) - spec.nu * x * eval_d1(vf, x) -
                       0.5 * spec.sigma * spec.sigma * x * x * d2 - reward(spec, x);
    }
    r.v_minus_Mv = eval(vf, x) - intervention_Mv(vf, x);
    return r;
}

SmoothFitReport smooth_fit_report(const ValueFunction& vf) {
    const auto* t = std::get_if<PolicyTriple>(&vf.outcome);
    if (!t)
        throw std::invalid_argument("smooth_fit_report: no boundaries under never-invest");
    const double c0 = vf.prims.spec.c0;
    SmoothFitReport report;
    // Continuation-side derivative at s; the action side is c0 identically.
    report.d_at_s = t->B * phi_d1(vf.prims, t->s) + vhat_d1(vf.prims, t->s) - c0;
    report.d_at_S = t->B * phi_d1(vf.prims, t->S) + vhat_d1(vf.prims, t->S) - c0;
    return report;
}

void write_grid_csv(const ValueFunction& vf, std::ostream& os, double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        throw std::invalid_argument("write_grid_csv requires 0 < lo < hi and points >= 2");
    const double* s = nullptr;
    if (const auto* t = std::get_if<PolicyTriple>(&vf.outcome)) s = &t->s;

    os << "x,v,v_prime,Mv,lv_minus_f,v_minus_Mv\n";
    os.precision(17);
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < points; ++i) {
        const double x = lo * std::exp(ratio * double(i) / double(points - 1));
        if (s && x == *s) continue;
        const QviResidual r = qvi_residual(vf, x);
        os << x << ',' << eval(vf, x) << ',' << eval_d1(vf, x) << ',' << intervention_Mv(vf, x)
           << ',' << r.lv_minus_f << ',' << r.v_minus_Mv << '\n';
    }
}

}  // namespace impulse
