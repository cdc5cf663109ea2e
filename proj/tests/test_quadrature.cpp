#include <qns/quadrature.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace qns;

TEST_CASE("adaptive integration of smooth functions") {
    auto r = integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0);
    CHECK(r.value == Catch::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(r.converged);

    r = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI);
    CHECK(r.value == Catch::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("integrable endpoint singularity") {
    auto r = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                                {1e-10, 1e-10, 0, std::numeric_limits<double>::infinity(), 100000});
    CHECK(r.value == Catch::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("capped panels resolve fast oscillation") {
    // int_0^20 sin(50 x) e^{-x} dx = 50/2501 * (1 - e^{-20}(cos(1000) + 50 sin(1000))/50...)
    const double a = 1.0, b = 50.0;
    auto f = [&](double x) { return std::sin(b * x) * std::exp(-a * x); };
    const double exact = b / (a * a + b * b) -
                         std::exp(-20.0 * a) * (a * std::sin(b * 20.0) + b * std::cos(b * 20.0)) /
                             (a * a + b * b);
    QuadOptions opt;
    opt.panel_cap = M_PI / (4.0 * b);
    auto r = integrate([&](double x) { return f(x); }, 0.0, 20.0, opt);
    CHECK(r.value == Catch::Approx(exact).epsilon(1e-10));
    CHECK(r.converged);
}

TEST_CASE("segment splitting handles kinks") {
    auto f = [](double x) { return std::abs(x - 1.0); };
    auto r = integrate_segments(f, {0.0, 1.0, 2.0});
    CHECK(r.value == Catch::Approx(1.0).epsilon(1e-13));
}
