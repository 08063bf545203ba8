#pragma once

#include <cmath>

namespace impulse::detail {

// Negative root of rho - nu*m - (sigma^2/2)*m*(m-1) = 0.
inline double characteristic_root(double rho, double nu, double sigma) {
    const double s2 = sigma * sigma;
    const double a = 0.5 - nu / s2;
    return a - std::sqrt(a * a + 2.0 * rho / s2);
}

// C_gamma = 1 / (rho - nu*gamma + gamma*(1-gamma)*sigma^2/2); positive under
// rho > max(nu, 0) and gamma in (0,1).
inline double c_gamma_constant(double rho, double nu, double sigma, double gamma) {
    return 1.0 / (rho - nu * gamma + 0.5 * gamma * (1.0 - gamma) * sigma * sigma);
}

// sup_{x>0} { C*x^gamma/gamma - alpha*x } for C > 0, alpha > 0:
// first-order condition C*x^(gamma-1) = alpha.
inline double fenchel_value(double c, double gamma, double alpha) {
    return std::pow(c, 1.0 / (1.0 - gamma)) * std::pow(alpha, -gamma / (1.0 - gamma)) *
           (1.0 / gamma - 1.0);
}

inline double fenchel_argmax(double c, double gamma, double alpha) {
    return std::pow(c / alpha, 1.0 / (1.0 - gamma));
}

}  // namespace impulse::detail
