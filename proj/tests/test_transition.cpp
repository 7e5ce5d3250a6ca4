#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lbdp/transition.hpp"

using namespace lbdp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("transition coefficients at a reference point", "[transition]") {
    // lambda=0.2, mu=0.1, t=5
    const auto c = coeffs(RateParams(0.2, 0.1), 5.0);
    CHECK_THAT(c.a, WithinRel(0.28236670080320807, 1e-13));
    CHECK_THAT(c.b, WithinRel(0.56473340160641615, 1e-13));
    CHECK(c.t == 5.0);
}

TEST_CASE("transition coefficient ranges and limits", "[transition]") {
    for (const auto& [l, m] : {std::pair{0.2, 0.1}, {0.1, 0.4}, {1.5, 0.05}, {0.0, 0.3}}) {
        for (double t : {0.1, 1.0, 5.0, 30.0}) {
            const auto c = coeffs(RateParams(l, m), t);
            CHECK(c.a >= 0.0);
            CHECK(c.a < 1.0);
            CHECK(c.b >= 0.0);
            CHECK(c.b < 1.0);
        }
    }
    // t -> 0: both coefficients vanish
    const auto c0 = coeffs(RateParams(0.2, 0.1), 1e-12);
    CHECK(c0.a < 1e-11);
    CHECK(c0.b < 1e-11);
    // critical case handled by the small-|alpha t| series: a = lambda t/(1+lambda t)
    const auto cc = coeffs(RateParams(0.3, 0.3), 2.0);
    CHECK_THAT(cc.a, WithinRel(0.6 / 1.6, 1e-9));
    CHECK_THAT(cc.b, WithinRel(0.6 / 1.6, 1e-9));
    // pure birth: a = 0
    const auto pb = coeffs(RateParams(0.2, 0.0), 3.0);
    CHECK(pb.a == 0.0);
    CHECK_THAT(pb.b, WithinRel(-std::expm1(-0.6), 1e-12));
    CHECK_THROWS_AS(coeffs(RateParams(0.2, 0.1), -1.0), InvalidParams);
}

TEST_CASE("log transition probabilities match independent values", "[transition]") {
    const auto c = coeffs(RateParams(0.2, 0.1), 5.0);
    struct Case {
        std::int64_t n, m;
        double logp;
    };
    // reference log P_{nm}(5) values computed with 40-digit arithmetic
    const Case cases[] = {
        {1, 0, -1.26454869531837479832},    {1, 1, -1.163593131502372452851},
        {3, 2, -2.080679391821947015335},   {5, 7, -2.229276147363787721307},
        {10, 10, -3.106512227526593142166}, {30, 25, -7.065533049502119777073},
    };
    for (const auto& tc : cases) {
        CAPTURE(tc.n, tc.m);
        CHECK_THAT(log_transition_keiding(tc.n, tc.m, c), WithinAbs(tc.logp, 1e-11));
        CHECK_THAT(log_transition_alternative(tc.n, tc.m, c), WithinAbs(tc.logp, 1e-11));
        CHECK_THAT(log_transition_2f1(tc.n, tc.m, c), WithinAbs(tc.logp, 1e-11));
    }
}

TEST_CASE("extinction probability equals the a coefficient", "[transition]") {
    for (const auto& [l, m] : {std::pair{0.2, 0.1}, {0.1, 0.4}, {1.0, 1.0}}) {
        for (double t : {0.5, 2.0, 8.0}) {
            const auto c = coeffs(RateParams(l, m), t);
            if (c.a <= 0.0 || 1.0 - c.a - c.b < 0.0) continue;
            CHECK_THAT(log_transition_keiding(1, 0, c), WithinRel(std::log(c.a), 1e-12));
            CHECK_THAT(log_transition_alternative(1, 0, c), WithinRel(std::log(c.a), 1e-12));
        }
    }
}

TEST_CASE("long intervals: positive-sum forms carry past the sign flip", "[transition]") {
    // lambda=1.5, mu=0.05: 1-a-b turns negative at log(30)/1.45 ~ 2.35,
    // where the double binomial sum loses its fixed sign
    const RateParams p(1.5, 0.05);
    for (double t : {3.0, 5.0}) {
        const auto c = coeffs(p, t);
        REQUIRE(1.0 - c.a - c.b < 0.0);
        CHECK_THROWS_AS(log_transition_keiding(2, 2, c), DomainError);
        for (std::int64_t n : {1, 4, 9}) {
            for (std::int64_t m : {0, 3, 12}) {
                const double a = log_transition_alternative(n, m, c);
                const double h = log_transition_2f1(n, m, c);
                CAPTURE(t, n, m, a);
                CHECK_THAT(h, WithinAbs(a, 1e-10));
            }
        }
    }
}

TEST_CASE("transition argument validation", "[transition]") {
    const auto c = coeffs(RateParams(0.2, 0.1), 1.0);
    CHECK_THROWS_AS(log_transition_keiding(0, 1, c), InvalidParams);
    CHECK_THROWS_AS(log_transition_keiding(-2, 1, c), InvalidParams);
    CHECK_THROWS_AS(log_transition_keiding(1, -1, c), InvalidParams);
    CHECK_THROWS_AS(log_transition_alternative(0, 1, c), InvalidParams);
    CHECK_THROWS_AS(log_transition_2f1(1, -1, c), InvalidParams);
}

TEST_CASE("gaussian transition log-density", "[transition]") {
    // x=100, alpha=0.1, sigma2=3, t=1, x_next=110.517:
    // variance 3*100*e^{0.1}(e^{0.1}-1) = 34.869552..., reference value
    // computed independently
    const double lp = gaussian_logpdf(110.517, 100.0, GrowthParams{0.1, 3.0}, 1.0);
    CHECK_THAT(lp, WithinAbs(-2.694745540131587305401, 1e-13));

    // density peaks at the conditional mean x e^{alpha t}
    const double peak = 100.0 * std::exp(0.1);
    CHECK(gaussian_logpdf(peak, 100.0, GrowthParams{0.1, 3.0}, 1.0) >
          gaussian_logpdf(peak + 3.0, 100.0, GrowthParams{0.1, 3.0}, 1.0));

    // subcritical: alpha<0 comes with sigma2<0, variance stays positive
    CHECK(std::isfinite(gaussian_logpdf(90.0, 100.0, GrowthParams{-0.1, -3.0}, 1.0)));
    // sign mismatch means nonpositive variance
    CHECK_THROWS_AS(gaussian_logpdf(90.0, 100.0, GrowthParams{-0.1, 3.0}, 1.0),
                    DegenerateVariance);
    CHECK_THROWS_AS(gaussian_logpdf(90.0, 0.0, GrowthParams{0.1, 3.0}, 1.0), InvalidParams);
    CHECK_THROWS_AS(gaussian_logpdf(90.0, 100.0, GrowthParams{0.1, 3.0}, 0.0), InvalidParams);
}
