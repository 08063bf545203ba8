#include "impulse/policy_solver.hpp"

#include "test_helpers.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <string>
#include <variant>

using namespace impulse;
namespace oracle = testutil::oracle;

namespace {

PolicyTriple solve_reference() {
    const SolveOutcome outcome = solve(testutil::base_spec());
    REQUIRE_FALSE(is_never_invest(outcome));
    return std::get<PolicyTriple>(outcome);
}

}  // namespace

TEST_SUITE("policy_solver") {

TEST_CASE("reference spec reproduces the frozen triple") {
    const PolicyTriple t = solve_reference();
    CHECK(t.B == doctest::Approx(oracle::kB).epsilon(1e-10));
    CHECK(t.s == doctest::Approx(oracle::kTrigger).epsilon(1e-10));
    CHECK(t.S == doctest::Approx(oracle::kTarget).epsilon(1e-10));

    const auto p = GbmPrimitives::build(testutil::base_spec());
    for (double r : system_residuals(p, t)) CHECK(std::abs(r) < 1e-9);
}

TEST_CASE("solver config defaults are the documented ones") {
    const SolverConfig cfg;
    CHECK(cfg.tol_inner == 1e-12);
    CHECK(cfg.tol_outer == 1e-11);
    CHECK(cfg.max_iter == 200);
    const PolicyTriple a = std::get<PolicyTriple>(solve(testutil::base_spec()));
    const PolicyTriple b = std::get<PolicyTriple>(solve(testutil::base_spec(), cfg));
    CHECK(a.B == b.B);
    CHECK(a.s == b.s);
    CHECK(a.S == b.S);
}

TEST_CASE("marginal is quasiconcave with the boundaries astride its peak") {
    const auto p = GbmPrimitives::build(testutil::base_spec());
    const PolicyTriple t = solve_reference();
    const double peak = peak_of_marginal(p, t.B);

    CHECK(peak == doctest::Approx(oracle::kMarginalPeak).epsilon(1e-12));
    CHECK(t.s < peak);
    CHECK(peak < t.S);

    // Both boundaries solve marginal = c0.
    CHECK(marginal_h(p, t.B, t.s) == doctest::Approx(p.spec.c0).epsilon(1e-9));
    CHECK(marginal_h(p, t.B, t.S) == doctest::Approx(p.spec.c0).epsilon(1e-9));

    // Rising to the left of the peak, falling to the right.
    double prev = marginal_h(p, t.B, peak * 0.05);
    for (double f : {0.2, 0.5, 0.9}) {
        const double cur = marginal_h(p, t.B, peak * f);
        CHECK(cur > prev);
        prev = cur;
    }
    prev = marginal_h(p, t.B, peak);
    for (double f : {1.5, 3.0, 10.0, 100.0}) {
        const double cur = marginal_h(p, t.B, peak * f);
        CHECK(cur < prev);
        prev = cur;
    }

    // Stationarity at the peak, by central difference.
    const double h = 1e-6 * peak;
    const double slope = (marginal_h(p, t.B, peak + h) - marginal_h(p, t.B, peak - h)) / (2 * h);
    CHECK(std::abs(slope) < 1e-6 * std::abs(marginal_h(p, t.B, peak)) / peak);
}

TEST_CASE("boundaries vanish when the peak falls below c0") {
    const auto p = GbmPrimitives::build(testutil::base_spec());
    const SolverConfig cfg;
    const PolicyTriple t = solve_reference();

    CHECK(boundaries_for(p, t.B, p.spec.c0, cfg).has_value());

    double B = 4.0 * t.B;
    int rounds = 0;
    while (boundaries_for(p, B, p.spec.c0, cfg).has_value() && rounds++ < 200) B *= 2.0;
    REQUIRE(rounds < 200);
    // Per the documented limit, an empty pair makes the gap exactly -c1.
    CHECK(gap(p, B, p.spec.c0, p.spec.c1, cfg) == -p.spec.c1);
}

TEST_CASE("gap is strictly decreasing with the documented limits") {
    const auto p = GbmPrimitives::build(testutil::base_spec());
    const SolverConfig cfg;
    const double c0 = p.spec.c0;
    const double c1 = p.spec.c1;
    const PolicyTriple t = solve_reference();

    const double at_zero = vhat_fenchel(p, c0) - c1;
    CHECK(gap(p, 1e-12, c0, c1, cfg) == doctest::Approx(at_zero).epsilon(1e-3));
    CHECK(gap(p, 1e12, c0, c1, cfg) == doctest::Approx(-c1).epsilon(1e-9));

    double prev = 1e300;
    for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double g = gap(p, f * t.B, c0, c1, cfg);
        CHECK(g < prev);
        prev = g;
    }
    CHECK(gap(p, 0.9 * t.B, c0, c1, cfg) > 0.0);
    CHECK(gap(p, 1.1 * t.B, c0, c1, cfg) < 0.0);
}

TEST_CASE("root of the gap is independent of the starting bracket") {
    const auto p = GbmPrimitives::build(testutil::base_spec());
    const SolverConfig cfg;
    const double c0 = p.spec.c0;
    const double c1 = p.spec.c1;
    const PolicyTriple t = solve_reference();

    auto bisect = [&](double lo, double hi) {
        REQUIRE(gap(p, lo, c0, c1, cfg) > 0.0);
        REQUIRE(gap(p, hi, c0, c1, cfg) < 0.0);
        for (int i = 0; i < 300 && (hi - lo) > 1e-12 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (gap(p, mid, c0, c1, cfg) > 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };

    const double roots[] = {bisect(1e-9, 400.0), bisect(1e-6, 5000.0), bisect(1e-3, 200.0),
                            bisect(50.0, 150.0), bisect(90.0, 110.0)};
    for (double r : roots) CHECK(r == doctest::Approx(t.B).epsilon(1e-8));
}

TEST_CASE("investment shuts off exactly at the viability threshold") {
    auto spec = testutil::base_spec();
    const double threshold = validate(spec).vhat_star_c0;

    spec.c1 = 66.0;  // just viable (threshold is about 66.3)
    CHECK_FALSE(is_never_invest(solve(spec)));

    spec.c1 = threshold;
    CHECK(is_never_invest(solve(spec)));

    spec.c1 = threshold * 1.01;
    CHECK(is_never_invest(solve(spec)));
}

TEST_CASE("random specs: residuals, ordering, and root straddle") {
    std::mt19937_64 rng(20240816);
    const SolverConfig cfg;
    int triples = 0;
    int nevers = 0;
    for (int draw = 0; draw < 40; ++draw) {
        const auto spec = testutil::sample_spec(rng);
        const auto report = validate(spec);
        REQUIRE(report.passed);
        const SolveOutcome outcome = solve(spec);
        if (is_never_invest(outcome)) {
            CHECK_FALSE(report.viable);
            ++nevers;
            continue;
        }
        CHECK(report.viable);
        ++triples;
        const auto p = GbmPrimitives::build(spec);
        const auto t = std::get<PolicyTriple>(outcome);
        CHECK(t.B > 0.0);
        CHECK(0.0 < t.s);
        CHECK(t.s < t.S);
        // Residuals come back normalized by max(1, c0); extreme draws push the
        // equation terms far above that, so re-scale the bound to the terms.
        const double h_s = t.B * phi(p, t.s) + vhat(p, t.s);
        const double h_S = t.B * phi(p, t.S) + vhat(p, t.S);
        const double renorm = std::max(1.0, spec.c0);
        const auto res = system_residuals(p, t);
        CHECK(res[0] * renorm < 1e-9 * std::max({1.0, spec.c0, std::abs(h_s), std::abs(h_S)}));
        CHECK(res[1] * renorm < 1e-9 * std::max({1.0, spec.c0, std::abs(vhat_d1(p, t.s))}));
        CHECK(res[2] * renorm < 1e-9 * std::max({1.0, spec.c0, std::abs(vhat_d1(p, t.S))}));
        CHECK(gap(p, 0.9 * t.B, spec.c0, spec.c1, cfg) > 0.0);
        CHECK(gap(p, 1.1 * t.B, spec.c0, spec.c1, cfg) < 0.0);
    }
    // The sampling box straddles the viability threshold; make sure the draw
    // actually exercised both outcome kinds.
    CHECK(triples > 0);
    CHECK(nevers > 0);
}

TEST_CASE("boundary motion under parameter changes") {
    auto spec = testutil::base_spec();

    // Larger fixed cost: act later (smaller trigger) but buy more.
    spec.sigma = 0.1;
    spec.c1 = 10.0;
    const auto low_c1 = std::get<PolicyTriple>(solve(spec));
    spec.c1 = 30.0;
    const auto high_c1 = std::get<PolicyTriple>(solve(spec));
    CHECK(high_c1.s < low_c1.s);
    CHECK(high_c1.S - high_c1.s > low_c1.S - low_c1.s);

    // Larger volatility: both the trigger and the jump size shrink.
    spec.c1 = 10.0;
    spec.sigma = 0.25;
    const auto high_sigma = std::get<PolicyTriple>(solve(spec));
    CHECK(high_sigma.s < low_c1.s);
    CHECK(high_sigma.S - high_sigma.s < low_c1.S - low_c1.s);
}

TEST_CASE("iteration cap failure reports the bracket") {
    SolverConfig cfg;
    cfg.max_iter = 1;
    try {
        solve(testutil::base_spec(), cfg);
        FAIL("expected SolverFailure");
    } catch (const SolverFailure& e) {
        CHECK(e.bracket_lo <= e.bracket_hi);
        CHECK(std::string(e.what()).size() > 0);
    }
}

TEST_CASE("solve validates the spec") {
    auto spec = testutil::base_spec();
    spec.rho = -1.0;
    CHECK_THROWS_AS(solve(spec), ValidationError);
}

TEST_CASE("outcome serialization") {
    const std::string never = outcome_to_json(SolveOutcome{NeverInvest{}});
    CHECK(never == "{\"kind\":\"never_invest\"}");

    const std::string triple = outcome_to_json(SolveOutcome{solve_reference()});
    CHECK(triple.rfind("{\"kind\":\"triple\",\"B\":", 0) == 0);
    CHECK(triple.find("\"s\":") != std::string::npos);
    CHECK(triple.find("\"S\":") != std::string::npos);
}

}  // TEST_SUITE
