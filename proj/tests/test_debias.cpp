#include <catch_amalgamated.hpp>

#include <cmath>

#include "irf/debias.hpp"

using namespace irf;

TEST_CASE("odds", "[debias]") {
    CHECK(odds(0.0) == 0.0);
    CHECK(odds(0.5) == 1.0);
    CHECK(odds(0.9) == Catch::Approx(9.0).epsilon(1e-12));
    try {
        odds(1.0);
        FAIL("expected OddsAtOne");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OddsAtOne);
    }
    CHECK_THROWS_AS(odds(-0.1), Error);
}

TEST_CASE("odds_ratio_R", "[debias]") {
    CHECK(odds_ratio_R(0.3, 0.3) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(odds_ratio_R(0.5, 0.1) == Catch::Approx(1.0 / 9.0).epsilon(1e-14));
    for (double m : {0.0, 1.0}) {
        try {
            odds_ratio_R(m, 0.2);
            FAIL("expected DegenerateMu");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DegenerateMu);
        }
    }
    // R is shared by the original and the rebalanced model.
    for (double mu : {0.05, 0.3, 0.7, 0.95}) {
        const PriorPair pr(0.1, 0.5);
        const double mu_star = g_inv(mu, pr);
        CHECK(std::abs(odds_ratio_R(mu, pr.p) - odds_ratio_R(mu_star, pr.p_star)) < 1e-12);
    }
}

TEST_CASE("g and g_inv worked values", "[debias]") {
    const PriorPair pr(0.1, 0.5);
    CHECK(g(0.5, pr) == Catch::Approx(0.1).epsilon(1e-14));
    CHECK(g_inv(0.1, pr) == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(g(0.0, pr) == 0.0);
    CHECK(g(1.0, pr) == 1.0);
    CHECK(g_inv(0.0, pr) == 0.0);
    CHECK(g_inv(1.0, pr) == 1.0);
    const PriorPair same(0.37, 0.37);
    for (int i = 0; i <= 100; ++i) {
        const double z = i / 100.0;
        CHECK(std::abs(g(z, same) - z) < 1e-15);
    }
    CHECK_THROWS_AS(g(1.2, pr), Error);
    CHECK_THROWS_AS(g_inv(-0.01, pr), Error);
    CHECK_THROWS_AS(PriorPair(0.0, 0.5), Error);
    CHECK_THROWS_AS(PriorPair(0.5, 1.0), Error);
}

TEST_CASE("g_n worked values", "[debias]") {
    CHECK(g_n(0.5, EmpiricalPriors(90, 10, 5, 5)) == Catch::Approx(0.1).epsilon(1e-14));
    CHECK(g_n(1.0, EmpiricalPriors(90, 10, 5, 5)) == 1.0);
    CHECK(g_n(0.0, EmpiricalPriors(90, 10, 5, 5)) == 0.0);
    // n0 s1 = n1 s0 makes g_n the identity.
    const EmpiricalPriors prop(60, 20, 9, 3);
    for (int i = 0; i <= 50; ++i) {
        const double z = i / 50.0;
        CHECK(std::abs(g_n(z, prop) - z) < 1e-15);
    }
    CHECK_THROWS_AS(EmpiricalPriors(0, 1, 1, 1), Error);
}

TEST_CASE("inversion, consistency, monotonicity and odds proportionality on a grid", "[debias]") {
    double inv = 0.0, odds_res = 0.0;
    for (int a = 1; a < 20; ++a) {
        for (int b = 1; b < 20; ++b) {
            const PriorPair pr(a / 20.0, b / 20.0);
            const double k = (pr.p / (1 - pr.p)) / (pr.p_star / (1 - pr.p_star));
            double prev_g = -1, prev_inv = -1;
            for (int c = 0; c <= 200; ++c) {
                const double z = c / 200.0;
                inv = std::max(inv, std::abs(g(g_inv(z, pr), pr) - z));
                const double gz = g(z, pr), iz = g_inv(z, pr);
                CHECK(gz > prev_g);
                CHECK(iz > prev_inv);
                prev_g = gz;
                prev_inv = iz;
                if (c > 0 && c < 200) {
                    odds_res = std::max(odds_res, std::abs(odds(gz) / odds(z) - k) / k);
                }
            }
        }
    }
    CHECK(inv < 1e-12);
    CHECK(odds_res < 1e-10);

    double cons = 0.0;
    for (std::size_t n0 : {5, 40, 900}) {
        for (std::size_t n1 : {1, 10, 100}) {
            for (std::size_t s0 : {1, 3, 10}) {
                for (std::size_t s1 : {1, 4, 10}) {
                    const EmpiricalPriors emp(n0, n1, s0, s1);
                    for (int c = 0; c <= 100; ++c) {
                        const double z = c / 100.0;
                        cons = std::max(cons, std::abs(g_n(z, emp) - g(z, emp.priors())));
                    }
                }
            }
        }
    }
    CHECK(cons < 1e-12);
}
