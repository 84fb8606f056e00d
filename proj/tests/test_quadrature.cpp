#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lowscat/ode.hpp"
#include "lowscat/quadrature.hpp"
#include "lowscat/roots.hpp"
#include "lowscat/trajectory.hpp"

using namespace lowscat;

TEST_CASE("gauss-legendre is exact for polynomials of degree 2n-1") {
    for (int n : {1, 4, 8, 20}) {
        const GaussRule& r = gauss_legendre(n);
        REQUIRE(static_cast<int>(r.x.size()) == n);
        const int deg = 2 * n - 1;
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += r.w[i] * std::pow(r.x[i], deg);
        CHECK(s == doctest::Approx(1.0 / (deg + 1)).epsilon(1e-14));
    }
}

TEST_CASE("kronrod panel and adaptive driver") {
    auto f = [](double x) { return std::exp(-x) * std::cos(3 * x); };
    const double exact = (1.0 - std::exp(-2.0) * (std::cos(6.0) - 3 * std::sin(6.0))) / 10.0;
    CHECK(gauss_kronrod15(f, 0.0, 2.0).value == doctest::Approx(exact).epsilon(1e-13));
    const QuadResult q = integrate(f, 0.0, 2.0, 1e-14);
    CHECK(std::abs(q.value - exact) < 1e-15);
    CHECK(integrate(f, 2.0, 0.0).value == doctest::Approx(-exact).epsilon(1e-13));
    CHECK(integrate(f, 1.0, 1.0).value == 0.0);
}

TEST_CASE("panel endpoints reproduce the adaptive value") {
    auto f = [](double x) { return 1.0 / (1e-3 + x * x); };
    std::vector<double> breaks;
    const double v = integrate(f, -1.0, 1.0, 1e-13, 0.0, 4000, &breaks).value;
    REQUIRE(breaks.size() > 2);
    CHECK(breaks.front() == -1.0);
    CHECK(breaks.back() == 1.0);
    CHECK(std::is_sorted(breaks.begin(), breaks.end()));
    CHECK(integrate_panels(f, breaks) == doctest::Approx(v).epsilon(1e-13));
    CHECK(v == doctest::Approx(2.0 / std::sqrt(1e-3) * std::atan(1.0 / std::sqrt(1e-3))).epsilon(1e-12));
}

TEST_CASE("endpoint singularity and semi-infinite tail") {
    auto inv_sqrt = [](double x) { return 1.0 / std::sqrt(x - 1.0); };
    CHECK(integrate_sqrt_left(inv_sqrt, 1.0, 5.0).value == doctest::Approx(4.0).epsilon(1e-13));
    auto p = [](double x) { return std::pow(x, -2.5); };
    CHECK(integrate_tail(p, 2.0, 2.0, 1e-13).value ==
          doctest::Approx(std::pow(2.0, -1.5) / 1.5).epsilon(1e-12));
}

TEST_CASE("fixed composite rule") {
    auto f = [](double x) { return std::sin(x); };
    CHECK(integrate_fixed(f, 0.0, std::numbers::pi, 4, 10) == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("adaptive driver reports an exhausted budget") {
    auto f = [](double x) { return std::sin(1.0 / x); };
    CHECK_THROWS_AS(integrate(f, 1e-8, 1.0, 1e-15, 0.0, 20), ConvergenceError);
}

TEST_CASE("brent") {
    auto f = [](double x) { return std::cos(x) - x; };
    const double r = brent(f, 0.0, 1.0, f(0.0), f(1.0));
    CHECK(r == doctest::Approx(0.7390851332151607).epsilon(1e-15));
    CHECK_THROWS_AS(brent(f, 0.0, 0.5, f(0.0), f(0.5)), ConvergenceError);
}

TEST_CASE("dopri5 on the harmonic oscillator lands on stops") {
    const OdeRhs rhs = [](double, const Vec& y, Vec& dy) {
        dy.resize(2);
        dy << y(1), -y(0);
    };
    Vec y0(2);
    y0 << 1.0, 0.0;
    std::vector<double> seen;
    Vec last;
    OdeOptions opt;
    opt.rtol = opt.atol = 1e-12;
    const OdeStats st = dopri5(rhs, 0.0, y0, 10.0, opt, [&](double t, const Vec& y, const Vec&) {
        seen.push_back(t);
        last = y;
        return true;
    }, {2.5, 7.0});
    CHECK(st.t_end == 10.0);
    CHECK(std::find(seen.begin(), seen.end(), 2.5) != seen.end());
    CHECK(std::find(seen.begin(), seen.end(), 7.0) != seen.end());
    CHECK(std::abs(last(0) - std::cos(10.0)) < 1e-10);
    CHECK(std::abs(last(1) + std::sin(10.0)) < 1e-10);
}

TEST_CASE("trajectory hermite interpolation is exact for cubics") {
    Trajectory tr;
    tr.times = {0.0, 1.0, 3.0};
    tr.positions.resize(1, 3);
    tr.velocities.resize(1, 3);
    for (int k = 0; k < 3; ++k) {
        const double t = tr.times[k];
        tr.positions(0, k) = t * t * t - t;
        tr.velocities(0, k) = 3 * t * t - 1;
    }
    CHECK(tr.sample_position(2.0)(0) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(tr.sample_velocity(0.5)(0) == doctest::Approx(-0.25).epsilon(1e-14));
}
