#pragma once

#include "impulse/gbm_primitives.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace impulse {

/// Solution of the three-equation smooth-pasting system
///   (i)   B*phi(s) + vhat(s) = B*phi(S) + vhat(S) - c0*(S - s) - c1
///   (ii)  B*phi'(s) + vhat'(s) = c0
///   (iii) B*phi'(S) + vhat'(S) = c0
/// s is the intervention trigger, S the intervention target, B the
/// coefficient of phi in the continuation branch of the value function.
struct PolicyTriple {
    double B = 0.0;  ///< > 0
    double s = 0.0;  ///< trigger boundary, 0 < s < S
    double S = 0.0;  ///< target boundary
};

/// Degenerate outcome when intervening is never worthwhile
/// (c1 >= vhat*(c0)): the continuation region is all of (0,inf) and the
/// value function equals vhat.
struct NeverInvest {};

using SolveOutcome = std::variant<PolicyTriple, NeverInvest>;

inline bool is_never_invest(const SolveOutcome& o) {
    return std::holds_alternative<NeverInvest>(o);
}

struct SolverConfig {
    double tol_inner = 1e-12;  ///< residual tolerance for the s,S roots
    double tol_outer = 1e-11;  ///< tolerance for the B equation
    int max_iter = 200;        ///< iteration cap per bisection / expansion
};

/// Thrown when bracketing or iteration fails; carries the best bracket seen.
class SolverFailure : public std::runtime_error {
  public:
    SolverFailure(const std::string& what, double bracket_lo, double bracket_hi)
        : std::runtime_error(what), bracket_lo(bracket_lo), bracket_hi(bracket_hi) {}
    double bracket_lo;
    double bracket_hi;
};

/// h_x(B,x) = B*phi'(x) + vhat'(x), the x-derivative of
/// h(B,x) = B*phi(x) + vhat(x). Strictly quasiconcave in x: increasing on
/// (0, x_dagger], decreasing on [x_dagger, inf), with h_x -> -inf at 0+ and
/// -> 0+ at infinity.
double marginal_h(const GbmPrimitives& p, double B, double x);

/// The unique stationary point x_dagger of h_x(B,.):
///   x_dagger = [B*m*(m-1) / (C_gamma*(1-gamma))]^(1/(gamma-m)).
double peak_of_marginal(const GbmPrimitives& p, double B);

/// The two roots s < x_dagger < S of h_x(B,.) = c0, or empty when the peak
/// value h_x(B, x_dagger) does not exceed c0. Each root is located by
/// bracketed bisection to cfg.tol_inner followed by one Newton polish step.
/// Throws SolverFailure if the iteration cap is exceeded.
std::optional<std::pair<double, double>> boundaries_for(const GbmPrimitives& p, double B,
                                                        double c0, const SolverConfig& cfg);

/// g(B) = [h(B,S(B)) - h(B,s(B)) - c0*(S(B)-s(B))] - c1, the residual of
/// system equation (i) along the curve where (ii)-(iii) hold. Strictly
/// decreasing in B; g -> vhat*(c0) - c1 as B -> 0+ and -> -c1 as B -> inf.
/// When boundaries_for is empty the limit value -c1 is returned.
double gap(const GbmPrimitives& p, double B, double c0, double c1, const SolverConfig& cfg);

/// Absolute residuals of the three system equations at a candidate triple,
/// each normalized by max(1, c0). Order: (i), (ii), (iii).
std::array<double, 3> system_residuals(const GbmPrimitives& p, const PolicyTriple& t);

/// Solves the full system. Non-viable specs give NeverInvest. Otherwise an
/// outer geometric bisection drives g(B) to zero over an automatically
/// expanded bracket (B_lo shrunk from 1e-8 until g > 0, B_hi doubled from 1
/// until g < 0), and the returned triple satisfies all three equations to
/// 1e-9 relative to the magnitude of their own terms. Uniqueness of the root
/// makes the result independent of bracket initialization.
/// Throws ValidationError on a failed spec, SolverFailure on bracket or
/// iteration failure, std::logic_error if the final residual check fails.
SolveOutcome solve(const ProblemSpec& spec, const SolverConfig& cfg = {});

/// {"kind":"triple","B":...,"s":...,"S":...} or {"kind":"never_invest"}.
std::string outcome_to_json(const SolveOutcome& outcome);

}  // namespace impulse
