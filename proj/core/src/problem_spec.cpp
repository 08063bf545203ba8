#include "impulse/problem_spec.hpp"

#include "gbm_detail.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace impulse {

namespace {

using json = nlohmann::ordered_json;

std::string describe(const ValidationReport& report) {
    std::ostringstream os;
    os << "problem spec failed validation:";
    for (const auto& [name, detail] : report.violations) os << " [" << name << "] " << detail;
    return os.str();
}

void require(ValidationReport& report, bool ok, const std::string& name,
             const std::string& detail) {
    if (!ok) report.violations.emplace_back(name, detail);
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

ValidationError::ValidationError(const ValidationReport& report)
    : std::runtime_error(describe(report)), report_(report) {}

ValidationReport validate(const ProblemSpec& spec) {
    ValidationReport report;
    report.c1 = spec.c1;
    report.vhat_star_c0 = std::numeric_limits<double>::quiet_NaN();

    const bool all_finite = std::isfinite(spec.rho) && std::isfinite(spec.nu) &&
                            std::isfinite(spec.sigma) && std::isfinite(spec.gamma) &&
                            std::isfinite(spec.c0) && std::isfinite(spec.c1);
    require(report, all_finite, "finite", "all six parameters must be finite numbers");

    if (all_finite) {
        require(report, spec.sigma > 0.0, "sigma > 0", "sigma = " + num(spec.sigma));
        require(report, spec.gamma > 0.0 && spec.gamma < 1.0, "gamma in (0,1)",
                "gamma = " + num(spec.gamma));
        require(report, spec.c0 > 0.0, "c0 > 0", "c0 = " + num(spec.c0));
        require(report, spec.c1 > 0.0, "c1 > 0", "c1 = " + num(spec.c1));
        const double nu_plus = std::max(spec.nu, 0.0);
        require(report, spec.rho > nu_plus, "rho > nu+",
                "rho = " + num(spec.rho) + " must exceed max(nu,0) = " + num(nu_plus));
    }

    report.passed = report.violations.empty();

    // Viability c1 < vhat*(c0), strict: equality means intervening never
    // beats waiting. Only meaningful once the assumptions hold.
    if (report.passed) {
        const double cg = detail::c_gamma_constant(spec.rho, spec.nu, spec.sigma, spec.gamma);
        report.vhat_star_c0 = detail::fenchel_value(cg, spec.gamma, spec.c0);
        report.viable = spec.c1 < report.vhat_star_c0;
    }
    return report;
}

std::string spec_to_json(const ProblemSpec& spec) {
    json j;
    j["rho"] = spec.rho;
    j["nu"] = spec.nu;
    j["sigma"] = spec.sigma;
    j["gamma"] = spec.gamma;
    j["c0"] = spec.c0;
    j["c1"] = spec.c1;
    return j.dump();
}

ProblemSpec spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("spec JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("spec JSON must be a flat object");

    static constexpr const char* kKeys[] = {"rho", "nu", "sigma", "gamma", "c0", "c1"};
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* k : kKeys) known = known || key == k;
        if (!known) throw std::invalid_argument("spec JSON has unknown key: " + key);
        if (!value.is_number())
            throw std::invalid_argument("spec JSON key is not numeric: " + key);
    }
    for (const char* k : kKeys)
        if (!j.contains(k)) throw std::invalid_argument(std::string("spec JSON missing key: ") + k);

    ProblemSpec spec;
    spec.rho = j["rho"].get<double>();
    spec.nu = j["nu"].get<double>();
    spec.sigma = j["sigma"].get<double>();
    spec.gamma = j["gamma"].get<double>();
    spec.c0 = j["c0"].get<double>();
    spec.c1 = j["c1"].get<double>();
    return spec;
}

}  // namespace impulse
