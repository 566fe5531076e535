#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "mgw/laws.hpp"

using namespace mgw;

namespace {

OffspringLaw binary() { return OffspringLaw::finite({0.6, 0.0, 0.4}); }

}  // namespace

TEST_CASE("offspring law validation names the violated condition") {
    CHECK_THROWS_WITH_AS(OffspringLaw::finite({0.5, 0.4}).validate(),
                         doctest::Contains("condp"), std::invalid_argument);
    CHECK_THROWS_AS(OffspringLaw::finite({0.0, 0.5, 0.5}).validate(),
                    std::invalid_argument);  // p(0) = 0
    CHECK_THROWS_AS(OffspringLaw::finite({0.6, 0.4}).validate(),
                    std::invalid_argument);  // p(0)+p(1) = 1
    CHECK_THROWS_AS(OffspringLaw::power_law(0.6, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(OffspringLaw::power_law(2.0, 3.0), std::invalid_argument);
    CHECK_NOTHROW(binary().validate());
}

TEST_CASE("parametric laws: p0, tail bound, mean") {
    const OffspringLaw pl = OffspringLaw::power_law(0.6, 3.0);
    // p(0) = 1 - 0.6 zeta(4)
    const double zeta4 = std::pow(std::acos(-1.0), 4) / 90.0;
    CHECK(pl.p(0) == doctest::Approx(1.0 - 0.6 * zeta4).epsilon(1e-12));
    double mass = pl.p(0);
    for (long k = 1; k <= 200000; ++k) mass += pl.p(k);
    CHECK(mass + pl.tail_bound(200000) >= 1.0);
    CHECK(mass <= 1.0 + 1e-12);
    // mu = 0.6 zeta(3)
    CHECK(pl.mean() == doctest::Approx(0.6 * 1.2020569031595943).epsilon(1e-10));
    CHECK(pl.radius() == 1.0);

    const OffspringLaw dp = OffspringLaw::damped_power_law(0.6, 3.0, 0.5);
    CHECK(dp.radius() == 2.0);
    double dmass = dp.p(0);
    for (long k = 1; k <= 200; ++k) dmass += dp.p(k);
    CHECK(dmass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mark function validation") {
    MarkFunction zero = MarkFunction::constant(0.0);
    CHECK_THROWS_AS(zero.validate(binary()), std::invalid_argument);
    CHECK_NOTHROW(MarkFunction::constant(0.5).validate(binary()));
    // ell_q = 1 requires the polynomial tail shape parameters.
    MarkFunction bad;
    bad.ell_q = 1.0;
    CHECK_THROWS_AS(bad.validate(OffspringLaw::power_law(0.6, 3.0)),
                    std::invalid_argument);
}

TEST_CASE("LawView scalars on the binary 0.6/0.4, q = 0.5 pair") {
    const LawView v(binary(), MarkFunction::constant(0.5));
    CHECK(v.mean() == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(v.mean_q() == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(v.mean_one_minus_q() == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(v.e_q() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(v.ell_q() == doctest::Approx(0.5));
    // E[(X-1)_+ 1{X>=2}] = 1 * p(2) = 0.4
    CHECK(v.plus_moment(QSel::One, 1, 2) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(v.plus_moment(QSel::Q, 0, 0) == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("certified series against brute force on a power law") {
    const LawView v(OffspringLaw::power_law(0.6, 3.0),
                    MarkFunction::constant(0.3));
    const SeriesValue sv = v.series(QSel::Q, 1, 0.9);
    double brute = 0.0;
    for (long k = 1; k <= 2000000; ++k)
        brute += v.p(k) * double(k) * std::pow(0.9, k - 0) * 0.3;
    CHECK(!sv.divergent);
    CHECK(std::fabs(sv.value - brute) <= sv.residual + 1e-12);
    // s beyond the radius is flagged divergent, not mis-summed.
    CHECK(v.series(QSel::One, 0, 1.5).divergent);
}

TEST_CASE("generating values and the admissible set") {
    const OffspringLaw p = binary();
    const MarkFunction q = MarkFunction::constant(1.0);
    // g(th) = 0.6 + 0.4 th^2, l = 0 when q = 1.
    const GeneratingValues gv = generating_values(p, q, 1.2);
    CHECK(gv.g.value == doctest::Approx(0.6 + 0.4 * 1.44).epsilon(1e-12));
    CHECK(gv.g_prime.value == doctest::Approx(0.8 * 1.2).epsilon(1e-12));
    CHECK(gv.l.value == doctest::Approx(0.0));
    CHECK(in_admissible_set(p, q, 1.2));
    // With q = 0: l(th) = g(th); l(th) < th fails once g(th) >= th.
    const MarkFunction q0{std::vector<double>{0.0, 0.0, 0.5}, 0.5, 0.0, 0.0};
    CHECK(in_admissible_set(p, q0, 1.0));
}

TEST_CASE("tilting: normalization, c_theta, mean formula") {
    const OffspringLaw p = binary();
    for (double qc : {1.0, 0.5}) {
        const MarkFunction q = MarkFunction::constant(qc);
        for (double th : {1.05, 1.1, 1.2}) {
            const TiltedPair tp = tilt(p, q, th);
            double mass = 0.0, mean = 0.0;
            for (long k = 0; k <= 2; ++k) {
                mass += tp.view.p(k);
                mean += double(k) * tp.view.p(k);
            }
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(mean ==
                  doctest::Approx(tilted_mean(p, q, th)).epsilon(1e-12));
            // q_theta = c q / (c q + 1 - q).
            const double c = tp.c_theta;
            CHECK(tp.view.q(2) ==
                  doctest::Approx(c * qc / (c * qc + 1 - qc)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(c_theta(p, MarkFunction::constant(0.5), 50.0),
                    std::domain_error);
}

TEST_CASE("theta = 1 tilt is the identity") {
    const TiltedPair tp = tilt(binary(), MarkFunction::constant(0.5), 1.0);
    CHECK(tp.c_theta == doctest::Approx(1.0).epsilon(1e-12));
    for (long k = 0; k <= 2; ++k)
        CHECK(tp.view.p(k) == doctest::Approx(binary().p(k)).epsilon(1e-14));
}

TEST_CASE("classification: critical, generic, non-generic") {
    const MarkFunction q1 = MarkFunction::constant(1.0);
    const MarkFunction q5 = MarkFunction::constant(0.5);

    // Critical law is reported as such.
    const Classification cc =
        classify(OffspringLaw::finite({0.5, 0.0, 0.5}), q5);
    CHECK(cc.verdict == Classification::Verdict::Critical);

    // Binary 0.6/0.4, q = 1: theta_c = sqrt(1.5).
    const Classification cg = classify(binary(), q1);
    REQUIRE(cg.verdict == Classification::Verdict::Generic);
    CHECK(std::fabs(cg.theta - std::sqrt(1.5)) <= 1e-10);
    CHECK(cg.diagnostics.mu_at_theta == doctest::Approx(1.0).epsilon(1e-9));

    // q = 0.5 shifts theta_c but the tilt is still exactly critical.
    const Classification cg5 = classify(binary(), q5);
    REQUIRE(cg5.verdict == Classification::Verdict::Generic);
    CHECK(tilted_mean(binary(), q5, cg5.theta) ==
          doctest::Approx(1.0).epsilon(1e-9));

    // Power law alpha = 3: rho = 1, mean below 1 for every admissible tilt.
    const Classification cn = classify(OffspringLaw::power_law(0.6, 3.0),
                                       MarkFunction::constant(0.3));
    REQUIRE(cn.verdict == Classification::Verdict::NonGeneric);
    CHECK(cn.diagnostics.branch.find("rho") != std::string::npos);

    // Super-critical laws are out of scope.
    CHECK_THROWS_AS(classify(OffspringLaw::finite({0.2, 0.0, 0.8}), q5),
                    std::domain_error);
}

TEST_CASE("law json round-trip") {
    LawPair lp{binary(), MarkFunction::constant(0.5)};
    const LawPair back = law_from_json(law_to_json(lp));
    CHECK(back.p.p(2) == doctest::Approx(0.4));
    CHECK(back.q.q(7) == doctest::Approx(0.5));

    LawPair pl{OffspringLaw::power_law(0.6, 3.0), MarkFunction::constant(0.3)};
    const LawPair back2 = law_from_json(law_to_json(pl));
    CHECK(back2.p.p(5) == doctest::Approx(0.6 * std::pow(5.0, -4.0)));
    CHECK_THROWS_AS(law_from_json("{\"schema\":99}"), std::invalid_argument);
}
