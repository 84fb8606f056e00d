#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lowscat/asymptotics.hpp"

using namespace lowscat;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("free motion") {
    const PotentialField free = PotentialField::of(TotalPotential{RadialPotential::free(), {}});
    const Trajectory tr = integrate_newton(free, vec2(2.0, 0.0), vec2(0.0, 1.0), 0.0, 1e4);
    const Vec end = tr.position(tr.size() - 1);
    CHECK(end(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(end(1) == doctest::Approx(1e4).epsilon(1e-12));
    const AsymptoticReport r = omega_plus(tr);
    CHECK((r.omega_plus - vec2(0.0, 1.0)).norm() < 1e-6);
    CHECK(r.position_growth == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(r.velocity_growth) < 1e-6);
}

TEST_CASE("integration records requested times and detects core entry") {
    const PotentialField c = PotentialField::of(TotalPotential{RadialPotential::coulomb(1.0), {}});
    const std::vector<double> times = {0.0, 1.0, 5.0, 20.0};
    const Trajectory tr = integrate_newton(c, vec2(5.0, 0.0), vec2(0.0, 1.0), times);
    REQUIRE(tr.size() == 4);
    CHECK(tr.times[2] == 5.0);
    CHECK(tr.max_energy_drift() < 1e-10);
    CHECK_THROWS_AS(integrate_newton(c, vec2(5.0, 0.0), vec2(-1.0, 0.0), 0.0, 100.0), CoreEntryError);
}

TEST_CASE("angular momentum tensor") {
    const Mat L = angular_momentum(vec2(1.0, 2.0), vec2(3.0, 5.0));
    CHECK(L(0, 1) == doctest::Approx(-1.0));
    CHECK(L(1, 0) == doctest::Approx(1.0));
    CHECK(L(0, 0) == 0.0);
}

TEST_CASE("log-log slope") {
    std::vector<double> t, y;
    for (int k = 0; k < 50; ++k) {
        t.push_back(std::pow(10.0, 0.1 * k));
        y.push_back(3.0 * std::pow(t.back(), 0.75));
    }
    CHECK(loglog_slope(t, y, 10.0, 1e4) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("coulomb scattering: virial bounds and exponents") {
    const RadialPotential v = RadialPotential::coulomb(1.0);
    const PotentialField pf = PotentialField::of(TotalPotential{v, {}});
    // λ = 0.5 from the turning point (0, 3)
    const Trajectory tr = integrate_newton(pf, vec2(0.0, 3.0), vec2(std::sqrt(1.0 + 2.0 / 3.0), 0.0), 0.0, 1e6);
    const VirialReport vr = virial_check(tr, v, {});
    CHECK(vr.virial_pass);
    CHECK(vr.growth_pass);
    CHECK(vr.expected_position == 1.0);
    CHECK(vr.position_exponent == doctest::Approx(1.0).epsilon(1e-2));
    // compare with the hyperbola asymptote
    const AsymptoticReport r = omega_plus(tr);
    const double L = 3.0 * std::sqrt(1.0 + 2.0 / 3.0);
    const double e = std::sqrt(1.0 + 2.0 * 0.5 * L * L);
    // the orbit starts at pericentre on +e₂; the outgoing asymptote is at angle π/2 - arccos(-1/e)
    const double ang = M_PI / 2 - std::acos(-1.0 / e);
    CHECK((r.omega_plus - vec2(std::cos(ang), std::sin(ang))).norm() < 1e-5);
}

TEST_CASE("zero-energy radial orbit grows like t^alpha") {
    const RadialPotential v = RadialPotential::power_law(1.0, 1.5);
    const PotentialField pf = PotentialField::of(TotalPotential{v, {}});
    const Trajectory tr = integrate_newton(pf, vec2(2.0, 0.0), vec2(std::sqrt(-2.0 * v.value(2.0)), 0.0), 0.0, 1e8);
    const VirialReport vr = virial_check(tr, v, {});
    CHECK(vr.expected_position == doctest::Approx(v.alpha()));
    CHECK(vr.position_exponent == doctest::Approx(v.alpha()).epsilon(1e-2));
    CHECK(vr.velocity_exponent == doctest::Approx(v.alpha() - 1.0).epsilon(2e-2));
}

TEST_CASE("logarithmic spiral keeps its phase and never settles") {
    const SpiralResult s = spiral_example(1.0, 1.0, 0.5, 10.0, 2.0);
    CHECK(s.A == doctest::Approx(1.0));
    CHECK(s.drift < 1e-8);
    CHECK(s.sweep >= std::log(100.0) - 1e-6);
    CHECK_THROWS_AS(spiral_example(1.0, -1.0, 0.5), DomainError);
}
