#include <qns/gamma.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using qns::real_gamma;

TEST_CASE("gamma matches exact values") {
    CHECK(real_gamma(1.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(real_gamma(2.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(real_gamma(5.0) == Catch::Approx(24.0).epsilon(1e-14));
    CHECK(real_gamma(0.5) == Catch::Approx(std::sqrt(M_PI)).epsilon(1e-14));
    CHECK(real_gamma(-0.5) == Catch::Approx(-2.0 * std::sqrt(M_PI)).epsilon(1e-13));
    CHECK(real_gamma(-1.5) == Catch::Approx(4.0 / 3.0 * std::sqrt(M_PI)).epsilon(1e-13));
    CHECK(real_gamma(-2.5) == Catch::Approx(-8.0 / 15.0 * std::sqrt(M_PI)).epsilon(1e-13));
}

TEST_CASE("gamma agrees with libm tgamma on a grid") {
    for (double x = 0.05; x < 12.0; x += 0.17)
        CHECK(real_gamma(x) == Catch::Approx(std::tgamma(x)).epsilon(1e-12));
    for (double x = -3.93; x < -0.1; x += 0.193)
        CHECK(real_gamma(x) == Catch::Approx(std::tgamma(x)).epsilon(1e-12));
}

TEST_CASE("gamma pole rejected") {
    CHECK_THROWS_AS(real_gamma(0.0), std::domain_error);
    CHECK_THROWS_AS(real_gamma(-3.0), std::domain_error);
}
