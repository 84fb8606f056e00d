#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lowscat/eikonal.hpp"

using namespace lowscat;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

ScatteringModel coulomb_model() {
    ScatteringModel m = make_model(RadialPotential::coulomb(1.0), Perturbation::none(), 2);
    m.R0 = 2.0;
    m.sigma0 = 0.5;
    return m;
}

ScatteringModel perturbed_model() {
    ScatteringModel m = make_model(RadialPotential::coulomb(1.0),
                                   Perturbation::anisotropic_power(0.02, 1.0, 0.25, vec2(0.0, 1.0)), 2);
    m.R0 = 2.0;
    m.sigma0 = 0.5;
    return m;
}

}  // namespace

TEST_CASE("coulomb phase on the axis at zero energy") {
    // φ(rω) = ∫_{R₀}^r √(2/ρ) dρ = 2√2(√r - √R₀)
    const ScatteringModel m = coulomb_model();
    const Vec om = vec2(1.0, 0.0);
    CHECK(phase(m, 4.0 * om, om, 0.0) == doctest::Approx(1.656854249492380).epsilon(1e-12));
    CHECK(phase_radial(m, 4.0 * om, om, 0.0) == doctest::Approx(1.656854249492380).epsilon(1e-12));
    // λ > 0 adds √(2λ)R₀ and integrates g
    const double lam = 0.5;
    auto G = [](double r) { return std::sqrt(r * r + 2.0 * r) + 2.0 * std::asinh(std::sqrt(r / 2.0)); };
    CHECK(phase(m, 6.0 * om, om, lam) == doctest::Approx(G(6.0) - G(2.0) + 2.0).epsilon(1e-11));
}

TEST_CASE("phase routes agree off the axis") {
    const ScatteringModel m = coulomb_model();
    const Vec om = vec2(1.0, 0.0), x = vec2(5.0, 1.5);
    FieldEvaluator fe(m);
    const double a = phase(fe, m, x, om, 0.2);
    CHECK(phase_arc_ray(fe, m, x, om, 0.2) == doctest::Approx(a).epsilon(1e-11));
    CHECK(phase_radial(m, x, om, 0.2) == doctest::Approx(a).epsilon(1e-11));
    CHECK(fe.solves() > 0);
}

TEST_CASE("incoming phase is the reflected outgoing one") {
    const ScatteringModel m = coulomb_model();
    const Vec om = vec2(1.0, 0.0), x = vec2(-5.0, 1.0);
    CHECK(incoming_phase(m, x, om, 0.1) == doctest::Approx(-phase(m, x, -om, 0.1)));
}

TEST_CASE("eikonal residual, coulomb") {
    const ScatteringModel m = coulomb_model();
    const Vec om = vec2(1.0, 0.0);
    for (double lam : {0.0, 0.5}) {
        const Vec x = vec2(6.0, 2.0);
        const PhaseSample s = eikonal_residual(m, x, om, lam);
        CHECK(std::abs(s.residual) < 1e-9 * (lam + std::abs(m.potential(x))));
        CHECK(s.gradient_error < 1e-8 * s.F.norm());
        CHECK(std::abs(s.energy_identity) < 1e-12);
        CHECK_FALSE(s.one_sided);
        CHECK(curl_check(m, x, om, lam) * x.norm() < 1e-6 * s.F.norm());
    }
}

TEST_CASE("eikonal residual, perturbed") {
    const ScatteringModel m = perturbed_model();
    PhaseOptions po;
    po.rel_tol = 1e-8;
    const Vec om = vec2(1.0, 0.0), x = vec2(6.0, 1.6);
    const PhaseSample s = eikonal_residual(m, x, om, 0.3, po);
    CHECK(std::abs(s.residual) < 1e-6 * (0.3 + std::abs(m.potential(x))));
    CHECK(s.gradient_error < 1e-6 * s.F.norm());
}

TEST_CASE("stencil shrinks near the cone boundary") {
    const ScatteringModel m = coulomb_model();
    const Vec om = vec2(1.0, 0.0);
    const double th = std::acos(1.0 - m.sigma0);
    const Vec x = 4.0 * vec2(std::cos(th * (1 - 1e-6)), std::sin(th * (1 - 1e-6)));
    const PhaseSample s = eikonal_residual(m, x, om, 0.0);
    CHECK((s.step < 4e-4 || s.one_sided));
    CHECK(s.gradient_error < 1e-5 * s.F.norm());
}

TEST_CASE("phase outside the cone is rejected") {
    const ScatteringModel m = coulomb_model();
    CHECK_THROWS_AS(phase(m, vec2(0.0, 5.0), vec2(1.0, 0.0), 0.0), ConeError);
}

TEST_CASE("self-classification of a mixed solution") {
    const ScatteringModel m = perturbed_model();
    const ScatteringData d{vec2(4.0, 1.0), vec2(1.0, 0.0), 0.3};
    const PerturbedSolution s = solve_mixed_perturbed(m, d);
    const ClassificationResult c = classify_orbit(m, s.y);
    CHECK(c.T0 == 1.0);
    CHECK((c.omega_plus - d.omega).norm() < 1e-8);
    CHECK(c.position_match < 1e-8);
    CHECK(c.lambda == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("scattering orbit is matched by the mixed solution") {
    ScatteringModel m = coulomb_model();
    const PotentialField pf = PotentialField::of(TotalPotential{m.v1, m.v2});
    const Trajectory tr = integrate_newton(pf, vec2(-20.0, 6.0), vec2(std::sqrt(0.6 + 2.0 / std::sqrt(436.0)), 0.0), 0.0, 1e6);
    const ClassificationResult c = classify_orbit(m, tr);
    CHECK(c.position_match < 1e-4);
    CHECK(c.velocity_match < 1e-4);
    CHECK(c.T0 >= c.t_entry);
    CHECK(c.diagnostics.hardy_margin > 0.0);
}

TEST_CASE("bound orbit is not classified") {
    const ScatteringModel m = coulomb_model();
    const PotentialField pf = PotentialField::of(TotalPotential{m.v1, m.v2});
    const Trajectory tr = integrate_newton(pf, vec2(4.0, 0.0), vec2(0.0, 0.5), 0.0, 1e4);
    CHECK_THROWS_AS(classify_orbit(m, tr), NoMatch);
}
