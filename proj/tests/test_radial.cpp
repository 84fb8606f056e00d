#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lowscat/radial.hpp"

using namespace lowscat;

namespace {

constexpr double pi = std::numbers::pi;

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("coulomb turning point and deflection") {
    const RadialPotential v = RadialPotential::coulomb(1.0);
    // λ = 0: r_tp = L²/2, θ_tp = π
    CHECK(turning_point(v, 0.0, 3.0) == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(std::abs(theta_tp(v, 0.0, 3.0)) == doctest::Approx(pi).epsilon(1e-12));
    CHECK(theta_tp(v, 0.0, 3.0) < 0.0);
    // λ > 0: cos θ_tp = -1/√(1 + 2λL²)
    const double lam = 0.5, L = 3.0;
    CHECK(std::abs(theta_tp(v, lam, L)) ==
          doctest::Approx(std::acos(-1.0 / std::sqrt(1.0 + 2.0 * lam * L * L))).epsilon(1e-12));
    CHECK(turning_point(v, 0.0, 0.0) == 0.0);
}

TEST_CASE("allowed angle at r1 = 2, lambda = 1/2") {
    const RadialPotential v = RadialPotential::coulomb(1.0);
    CHECK(allowed_angle(v, 0.5, 2.0) == doctest::Approx(1.9106332362490186).epsilon(1e-12));
    CHECK(allowed_angle_floor(v) == doctest::Approx(pi / 2));
}

TEST_CASE("theta1 and L are inverse maps") {
    const RadialPotential v = RadialPotential::power_law_plus_short_range(1.0, 0.6, 1.0, 1.2);
    for (double lam : {0.0, 0.2})
        for (double th : {-0.1, -0.9, -1.5}) {
            const double L = L_of_theta1(v, lam, 2.0, th);
            CHECK(L > 0.0);
            CHECK(theta1_of_L(v, lam, 2.0, L) == doctest::Approx(th).epsilon(1e-12));
        }
    CHECK(L_of_theta1(v, 0.0, 2.0, 0.0) == 0.0);
    CHECK(L_of_theta1(v, 0.0, 2.0, 0.4) < 0.0);
    CHECK_THROWS_AS(L_of_theta1(v, 0.0, 2.0, -3.0), AdmissibilityError);
    CHECK_THROWS_AS(L_of_theta1(v, 0.0, 0.5, -0.1), DomainError);
}

TEST_CASE("zero-energy power law deflection is pi/(2-mu)") {
    for (double mu : {0.5, 1.0, 1.5, 1.8}) {
        const RadialPotential v = RadialPotential::power_law(1.0, mu);
        for (double L : {1.5, 2.5, 7.0})
            CHECK(std::abs(theta_tp(v, 0.0, L)) == doctest::Approx(pi / (2.0 - mu)).epsilon(1e-10));
    }
}

TEST_CASE("sensitivity constant") {
    for (double mu : {0.5, 1.0, 1.5}) {
        const RadialPotential v = RadialPotential::power_law(1.0, mu);
        CHECK(kappa_sensitivity(v, 0.0, 2.0) == doctest::Approx((1 - mu / 2) * (1 - mu / 2)).epsilon(1e-9));
    }
}

TEST_CASE("time-radius map of the zero-energy radial coulomb orbit") {
    const RadialPotential v = RadialPotential::coulomb(1.0);
    const TimeRadiusMap m(v, 0.0, 0.0, 1.0);
    // t = 1 + (√2/3)(r^{3/2} - 1)
    const double r = 30.0;
    const double t = 1.0 + std::sqrt(2.0) / 3.0 * (std::pow(r, 1.5) - 1.0);
    CHECK(m.t_of_r(r) == doctest::Approx(t).epsilon(1e-12));
    CHECK(m.r_of_t(t) == doctest::Approx(r).epsilon(1e-12));
    CHECK_THROWS_AS(m.r_of_t(0.5), DomainError);
}

TEST_CASE("planar orbit conserves energy and angular momentum") {
    const RadialPotential v = RadialPotential::power_law(1.0, 1.5);
    const PlanarOrbit o = make_planar_orbit(v, 0.3, 2.0, -0.8);
    const Trajectory tr = planar_orbit_trajectory(v, o, log_time_grid(1e5, 500));
    REQUIRE(tr.size() == 501);
    CHECK(tr.max_energy_drift() < 1e-12);
    for (int k = 0; k < tr.size(); k += 50) {
        const Vec x = tr.position(k), u = tr.velocity(k);
        CHECK(x(0) * u(1) - x(1) * u(0) == doctest::Approx(o.L).epsilon(1e-12));
    }
    // leaves along e₁
    const Vec last = tr.position(tr.size() - 1).normalized();
    CHECK(last(0) > 0.99);
}

TEST_CASE("orbit started on the turning point") {
    const RadialPotential v = RadialPotential::power_law(1.0, 1.8);
    const PlanarOrbit o = make_planar_orbit(v, 0.0, 1.0, theta1_of_kappa(v, 0.0, 1.0, 1.0), 1.0);
    CHECK(o.r_tp == doctest::Approx(1.0).epsilon(1e-12));
    const Trajectory tr = planar_orbit_trajectory(v, o, log_time_grid(1e4, 200));
    CHECK(tr.max_energy_drift() < 1e-12);
    CHECK(tr.position(tr.size() - 1).norm() > 10.0);
}

TEST_CASE("mixed radial problem") {
    const RadialPotential v = RadialPotential::coulomb(1.0);
    const ScatteringData d{vec2(3.0, 2.0), vec2(1.0, 0.0), 0.2};
    const MixedRadialSolution s = solve_mixed_radial(v, d, log_time_grid(1e6, 600));
    CHECK((s.trajectory.position(0) - d.x).norm() < 1e-13);
    CHECK(s.orbit.r1 == doctest::Approx(d.x.norm()));
    CHECK((s.trajectory.velocity(0) - s.F1).norm() < 1e-13);
    CHECK(0.5 * s.F1.squaredNorm() + v.value(d.x.norm()) == doctest::Approx(0.2).epsilon(1e-13));
    CHECK((radial_field(v, d.x, d.omega, d.lambda) - s.F1).norm() < 1e-12);
    const Vec dir = s.trajectory.position(s.trajectory.size() - 1).normalized();
    CHECK((dir - d.omega).norm() < 1e-2);
}

TEST_CASE("embedding in three dimensions") {
    const RadialPotential v = RadialPotential::coulomb(1.0);
    Vec x(3), om(3);
    x << 2.0, 0.0, 1.0;
    om << 1.0, 0.0, 0.0;
    const MixedRadialSolution s = solve_mixed_radial(v, {x, om, 0.0}, log_time_grid(1e3, 100));
    for (int k = 0; k < s.trajectory.size(); ++k) CHECK(std::abs(s.trajectory.positions(1, k)) < 1e-14);
}

TEST_CASE("cone membership") {
    const Cone c{2.0, 0.5, vec2(1.0, 0.0), +1};
    CHECK(c.contains(vec2(3.0, 0.0)));
    CHECK_FALSE(c.contains(vec2(1.5, 0.0)));
    CHECK_FALSE(c.contains(vec2(0.0, 3.0)));
}

TEST_CASE("log grid") {
    const std::vector<double> t = log_time_grid(1e4, 8);
    REQUIRE(t.size() == 9);
    CHECK(t.front() == 1.0);
    CHECK(t.back() == doctest::Approx(1e4));
    CHECK(t[2] == doctest::Approx(10.0));
}
