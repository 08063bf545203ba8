#include "impulse/policy_solver.hpp"

#include "json.hpp"

#include <cmath>
#include <stdexcept>

namespace impulse {

namespace {

// h(B,x) = B*phi(x) + vhat(x); the system lives entirely on h and h_x.
double h_value(const GbmPrimitives& p, double B, double x) {
    return B * phi(p, x) + vhat(p, x);
}

// d/dx of marginal_h; needed only for the Newton polish.
double marginal_h_d1(const GbmPrimitives& p, double B, double x) {
    return B * phi_d2(p, x) + vhat_d2(p, x);
}

// Bracketed bisection for marginal_h(B,.) = c0 on [lo, hi] where the
// residual changes sign, followed by one Newton polish step kept inside the
// bracket. tol_inner bounds both the accepted residual and the relative
// bracket width.
double bisect_root(const GbmPrimitives& p, double B, double c0, double lo, double hi,
                   bool rising, const SolverConfig& cfg) {
    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < cfg.max_iter; ++i) {
        mid = 0.5 * (lo + hi);
        const double r = marginal_h(p, B, mid) - c0;
        if (std::abs(r) < cfg.tol_inner || (hi - lo) < cfg.tol_inner * std::max(1.0, mid)) {
            const double slope = marginal_h_d1(p, B, mid);
            if (slope != 0.0) {
                const double polished = mid - r / slope;
                if (polished > lo && polished < hi) mid = polished;
            }
            return mid;
        }
        if ((r > 0.0) == rising)
            hi = mid;
        else
            lo = mid;
    }
    throw SolverFailure("inner root search exceeded max_iter", lo, hi);
}

}  // namespace

double marginal_h(const GbmPrimitives& p, double B, double x) {
    return B * phi_d1(p, x) + vhat_d1(p, x);
}

double peak_of_marginal(const GbmPrimitives& p, double B) {
    // Stationary point of h_x: B*m*(m-1)*x^(m-2) = C_gamma*(1-gamma)*x^(gamma-2).
    const double gamma = p.spec.gamma;
    const double num = B * p.m * (p.m - 1.0);
    const double den = p.c_gamma * (1.0 - gamma);
    return std::pow(num / den, 1.0 / (gamma - p.m));
}

std::optional<std::pair<double, double>> boundaries_for(const GbmPrimitives& p, double B,
                                                        double c0, const SolverConfig& cfg) {
    const double x_dag = peak_of_marginal(p, B);
    if (!(marginal_h(p, B, x_dag) > c0)) return std::nullopt;

    // Left root: h_x rises from -inf on (0, x_dag]; walk down to a sign change.
    double lo = x_dag;
    for (int i = 0; i < cfg.max_iter && marginal_h(p, B, lo) > c0; ++i) lo *= 0.5;
    if (marginal_h(p, B, lo) > c0)
        throw SolverFailure("no lower bracket for the trigger root", lo, x_dag);
    const double s = bisect_root(p, B, c0, lo, x_dag, /*rising=*/true, cfg);

    // Right root: h_x falls to 0+ on [x_dag, inf); walk up to a sign change.
    double hi = x_dag;
    for (int i = 0; i < cfg.max_iter && marginal_h(p, B, hi) > c0; ++i) hi *= 2.0;
    if (marginal_h(p, B, hi) > c0)
        throw SolverFailure("no upper bracket for the target root", x_dag, hi);
    const double S = bisect_root(p, B, c0, x_dag, hi, /*rising=*/false, cfg);

    return std::make_pair(s, S);
}

double gap(const GbmPrimitives& p, double B, double c0, double c1, const SolverConfig& cfg) {
    const auto roots = boundaries_for(p, B, c0, cfg);
    // No crossing: the integral of (h_x - c0)^+ is empty, leaving -c1.
    if (!roots) return -c1;
    const auto [s, S] = *roots;
    return h_value(p, B, S) - h_value(p, B, s) - c0 * (S - s) - c1;
}

std::array<double, 3> system_residuals(const GbmPrimitives& p, const PolicyTriple& t) {
    const double c0 = p.spec.c0;
    const double c1 = p.spec.c1;
    const double scale = std::max(1.0, c0);
    const double r1 =
        h_value(p, t.B, t.s) - (h_value(p, t.B, t.S) - c0 * (t.S - t.s) - c1);
    const double r2 = marginal_h(p, t.B, t.s) - c0;
    const double r3 = marginal_h(p, t.B, t.S) - c0;
    return {std::abs(r1) / scale, std::abs(r2) / scale, std::abs(r3) / scale};
}

SolveOutcome solve(const ProblemSpec& spec, const SolverConfig& cfg) {
    const GbmPrimitives p = GbmPrimitives::build(spec);
    const ValidationReport report = validate(spec);
    if (!report.viable) return NeverInvest{};

    const double c0 = spec.c0;
    const double c1 = spec.c1;

    // g is strictly decreasing with g(0+) = vhat*(c0) - c1 > 0 under
    // viability and g -> -c1 < 0. Establish a sign-changing bracket. The
    // floor on b_lo keeps the shrink loop off denormals, where x^m overflows
    // inside gap() before the bracket test can fail.
    double b_lo = 1e-8;
    for (int i = 0; i < cfg.max_iter && b_lo > 1e-300 && !(gap(p, b_lo, c0, c1, cfg) > 0.0); ++i)
        b_lo *= 1e-2;
    if (!(gap(p, b_lo, c0, c1, cfg) > 0.0))
        throw SolverFailure("no positive-gap lower bracket despite viability", 0.0, b_lo);

    double b_hi = 1.0;
    {
        int i = 0;
        for (; i < cfg.max_iter && !(gap(p, b_hi, c0, c1, cfg) < 0.0); ++i) b_hi *= 2.0;
        if (i == cfg.max_iter)
            throw SolverFailure("no negative-gap upper bracket after doubling", b_lo, b_hi);
    }

    // B spans many orders of magnitude across admissible parameters (it
    // offsets x^m, and m can be steeply negative), so bisect on the geometric
    // midpoint with a relative width stop; a linear midpoint cannot resolve a
    // root far below the top of the bracket.
    double b_mid = std::sqrt(b_lo) * std::sqrt(b_hi);
    bool converged = false;
    for (int i = 0; i < cfg.max_iter; ++i) {
        b_mid = std::sqrt(b_lo) * std::sqrt(b_hi);
        const double g = gap(p, b_mid, c0, c1, cfg);
        if (std::abs(g) < cfg.tol_outer || (b_hi - b_lo) < 1e-14 * b_mid) {
            converged = true;
            break;
        }
        if (g > 0.0)
            b_lo = b_mid;
        else
            b_hi = b_mid;
    }
    if (!converged) throw SolverFailure("outer bisection exceeded max_iter", b_lo, b_hi);

    const auto roots = boundaries_for(p, b_mid, c0, cfg);
    if (!roots) throw SolverFailure("converged B lost the root pair", b_lo, b_hi);

    // Backward-error check: each equation must hold at the scale of its own
    // terms. For extreme parameters the value terms sit many orders of
    // magnitude above c0, and a fixed normalization would reject triples that
    // are exact to machine precision.
    PolicyTriple triple{b_mid, roots->first, roots->second};
    const double h_s = h_value(p, triple.B, triple.s);
    const double h_S = h_value(p, triple.B, triple.S);
    const double r1 = h_s - (h_S - c0 * (triple.S - triple.s) - c1);
    const double r2 = marginal_h(p, triple.B, triple.s) - c0;
    const double r3 = marginal_h(p, triple.B, triple.S) - c0;
    const bool ok =
        std::abs(r1) <= 1e-9 * std::max({1.0, c0, std::abs(h_s), std::abs(h_S)}) &&
        std::abs(r2) <= 1e-9 * std::max({1.0, c0, std::abs(vhat_d1(p, triple.s))}) &&
        std::abs(r3) <= 1e-9 * std::max({1.0, c0, std::abs(vhat_d1(p, triple.S))});
    if (!ok) throw std::logic_error("solved triple fails the system residual check");
    return triple;
}

std::string outcome_to_json(const SolveOutcome& outcome) {
    nlohmann::ordered_json j;
    if (const auto* t = std::get_if<PolicyTriple>(&outcome)) {
        j["kind"] = "triple";
        j["B"] = t->B;
        j["s"] = t->s;
        j["S"] = t->S;
    } else {
        j["kind"] = "never_invest";
    }
    return j.dump();
}

}  // namespace impulse
