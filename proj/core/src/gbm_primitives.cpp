#include "impulse/gbm_primitives.hpp"

#include "gbm_detail.hpp"

#include <cmath>
#include <stdexcept>

namespace impulse {

namespace {

void require_positive(double x, const char* what) {
    if (!(x > 0.0)) throw std::domain_error(std::string(what) + " requires a positive argument");
}

}  // namespace

GbmPrimitives GbmPrimitives::build(const ProblemSpec& spec) {
    const ValidationReport report = validate(spec);
    if (!report.passed) throw ValidationError(report);

    GbmPrimitives p;
    p.spec = spec;
    p.m = detail::characteristic_root(spec.rho, spec.nu, spec.sigma);
    p.c_gamma = detail::c_gamma_constant(spec.rho, spec.nu, spec.sigma, spec.gamma);
    return p;
}

double phi(const GbmPrimitives& p, double x) {
    require_positive(x, "phi");
    return std::pow(x, p.m);
}

double phi_d1(const GbmPrimitives& p, double x) {
    require_positive(x, "phi_d1");
    return p.m * std::pow(x, p.m - 1.0);
}

double phi_d2(const GbmPrimitives& p, double x) {
    require_positive(x, "phi_d2");
    return p.m * (p.m - 1.0) * std::pow(x, p.m - 2.0);
}

double vhat(const GbmPrimitives& p, double x) {
    require_positive(x, "vhat");
    return p.c_gamma * std::pow(x, p.spec.gamma) / p.spec.gamma;
}

double vhat_d1(const GbmPrimitives& p, double x) {
    require_positive(x, "vhat_d1");
    return p.c_gamma * std::pow(x, p.spec.gamma - 1.0);
}

double vhat_d2(const GbmPrimitives& p, double x) {
    require_positive(x, "vhat_d2");
    return p.c_gamma * (p.spec.gamma - 1.0) * std::pow(x, p.spec.gamma - 2.0);
}

double vhat_fenchel(const GbmPrimitives& p, double alpha) {
    require_positive(alpha, "vhat_fenchel");
    return detail::fenchel_value(p.c_gamma, p.spec.gamma, alpha);
}

double vhat_fenchel_argmax(const GbmPrimitives& p, double alpha) {
    require_positive(alpha, "vhat_fenchel_argmax");
    return detail::fenchel_argmax(p.c_gamma, p.spec.gamma, alpha);
}

double reward_fenchel(double gamma, double alpha) {
    require_positive(alpha, "reward_fenchel");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::domain_error("reward_fenchel requires gamma in (0,1)");
    return detail::fenchel_value(1.0, gamma, alpha);
}

}  // namespace impulse
