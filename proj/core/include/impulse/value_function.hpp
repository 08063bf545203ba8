#pragma once

#include "impulse/gbm_primitives.hpp"
#include "impulse/policy_solver.hpp"

#include <iosfwd>

namespace impulse {

/// Piecewise closed-form value function assembled from a solve outcome.
///
/// With a triple (B,s,S):
///   v(x) = B*phi(S) + vhat(S) - c0*(S - x) - c1   on (0, s]   (action region)
///   v(x) = B*phi(x) + vhat(x)                     on (s, inf) (continuation)
/// C1-pasted at s by construction. Under NeverInvest, v == vhat everywhere.
struct ValueFunction {
    GbmPrimitives prims;
    SolveOutcome outcome;
};

/// Convenience: validate, solve, assemble.
ValueFunction make_value_function(const ProblemSpec& spec, const SolverConfig& cfg = {});

/// v(x). Domain x > 0, else std::domain_error.
double eval(const ValueFunction& vf, double x);

/// v'(x); equals c0 on (0,s]. Domain x > 0, else std::domain_error.
double eval_d1(const ValueFunction& vf, double x);

/// Intervention operator Mv(x) = sup_{i>0} { v(x+i) - c0*i - c1 }.
///
/// With a triple: the maximizer is x+i = S for x < S (v' = c0 at S and v' is
/// quasiconcave), giving Mv(x) = v(S) - c0*(S-x) - c1; for x >= S the
/// supremum is the i -> 0+ limit v(x) - c1. Under NeverInvest the same
/// structure holds with S replaced by the maximizer of vhat(y) - c0*y.
/// A bounded golden-section search over the jump target is used when the
/// analytic maximizer is not available; its upper bound comes from the
/// linear growth bound, beyond which v(y) - c0*y is decreasing.
double intervention_Mv(const ValueFunction& vf, double x);

struct QviResidual {
    double lv_minus_f = 0.0;  ///< Lv(x) - f(x)
    double v_minus_Mv = 0.0;  ///< v(x) - Mv(x)
};

/// Both components of the quasi-variational inequality
/// min{ Lv - f, v - Mv } = 0 at x.
///
/// On the continuation region Lv - f vanishes analytically; on the action
/// region v is affine so Lv - f = rho*v(x) - nu*x*c0 - x^gamma/gamma, which
/// must be nonnegative. Evaluation at x == s is refused
/// (std::invalid_argument): v'' jumps there and a one-sided value would mask
/// pasting errors. Under NeverInvest there is no kink and every x > 0 is
/// accepted.
QviResidual qvi_residual(const ValueFunction& vf, double x);

struct SmoothFitReport {
    double d_at_s = 0.0;  ///< v'(s+) - c0
    double d_at_S = 0.0;  ///< v'(S) - c0
};

/// Smooth-fit residuals at both boundaries. Throws std::invalid_argument
/// under NeverInvest (no boundaries exist).
SmoothFitReport smooth_fit_report(const ValueFunction& vf);

/// Writes the verification grid as CSV with header
/// `x,v,v_prime,Mv,lv_minus_f,v_minus_Mv` over a log-spaced grid of
/// `points` values on [lo, hi]. A grid point colliding exactly with s is
/// skipped (the residual evaluator refuses it).
void write_grid_csv(const ValueFunction& vf, std::ostream& os, double lo, double hi, int points);

}  // namespace impulse
