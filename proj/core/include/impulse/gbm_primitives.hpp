#pragma once

#include "impulse/problem_spec.hpp"

namespace impulse {

/// Closed-form constants and evaluators for the geometric-Brownian-motion
/// problem with power reward f(x) = x^gamma / gamma.
///
/// Two functions carry the whole theory:
///   phi(x)  = x^m, the strictly decreasing positive solution of the
///             homogeneous generator equation L u = 0, where
///             L u = rho*u - nu*x*u' - (sigma^2/2)*x^2*u'';
///   vhat(x) = C_gamma * x^gamma / gamma, the expected discounted reward of
///             never intervening, solving L u = f.
///
/// m is the negative root of rho - nu*m - (sigma^2/2)*m*(m-1) = 0:
///   m = (1/2 - nu/sigma^2) - sqrt((1/2 - nu/sigma^2)^2 + 2*rho/sigma^2),
/// and C_gamma = 1 / (rho - nu*gamma + gamma*(1-gamma)*sigma^2/2).
/// The standing assumption rho > max(nu, 0) makes the discriminant positive
/// and C_gamma finite and positive.
struct GbmPrimitives {
    double m = 0.0;        ///< negative characteristic root, < 0
    double c_gamma = 0.0;  ///< the constant C_gamma, > 0
    ProblemSpec spec;      ///< owning problem instance

    /// Validates `spec` and computes the constants.
    /// Throws ValidationError when any standing assumption fails;
    /// viability is not required (the never-invest case still needs vhat).
    static GbmPrimitives build(const ProblemSpec& spec);
};

/// phi(x) = x^m and derivatives. phi is normalized so phi(1) = 1; the
/// solver coefficient B absorbs any rescaling. Domain x > 0, else
/// std::domain_error.
double phi(const GbmPrimitives& p, double x);
double phi_d1(const GbmPrimitives& p, double x);
double phi_d2(const GbmPrimitives& p, double x);

/// vhat(x) = C_gamma * x^gamma / gamma and derivatives. Strictly increasing,
/// strictly concave. Domain x > 0, else std::domain_error.
double vhat(const GbmPrimitives& p, double x);
double vhat_d1(const GbmPrimitives& p, double x);
double vhat_d2(const GbmPrimitives& p, double x);

/// Fenchel-type transform vhat*(alpha) = sup_{x>0} { vhat(x) - alpha*x }.
/// Closed form from the first-order condition vhat'(x*) = alpha:
///   x*          = (C_gamma/alpha)^(1/(1-gamma)),
///   vhat*(alpha) = C_gamma^(1/(1-gamma)) * alpha^(-gamma/(1-gamma)) * (1/gamma - 1).
/// Strictly decreasing in alpha with limit 0. Domain alpha > 0, else
/// std::domain_error.
double vhat_fenchel(const GbmPrimitives& p, double alpha);

/// The maximizer x* attaining vhat_fenchel(p, alpha).
double vhat_fenchel_argmax(const GbmPrimitives& p, double alpha);

/// Fenchel transform of the running reward itself:
///   f*(alpha) = sup_{x>0} { x^gamma/gamma - alpha*x }
///             = alpha^(-gamma/(1-gamma)) * (1/gamma - 1).
/// Used by the linear growth bound v(x) <= f*(alpha)/rho + alpha*x/rho and by
/// the simulation truncation bound. Domain alpha > 0, gamma in (0,1).
double reward_fenchel(double gamma, double alpha);

}  // namespace impulse
