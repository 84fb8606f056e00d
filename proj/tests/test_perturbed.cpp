#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lowscat/perturbed.hpp"

using namespace lowscat;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

ScatteringModel perturbed_model() {
    ScatteringModel m = make_model(RadialPotential::coulomb(1.0),
                                   Perturbation::anisotropic_power(0.02, 1.0, 0.25, vec2(0.0, 1.0)), 2);
    m.R0 = 2.0;
    m.sigma0 = 0.5;
    return m;
}

}  // namespace

TEST_CASE("model constants") {
    const ScatteringModel m = perturbed_model();
    CHECK(m.alpha == doctest::Approx(2.0 / 3.0));
    CHECK(m.eps2 == 0.25);
    CHECK(m.eps == doctest::Approx(0.9 * m.alpha * 0.25));
    CHECK(m.s == doctest::Approx(m.alpha + 0.5 - m.eps));
    CHECK(m.grid.size() == 1001);
    const ScatteringModel c = make_model(RadialPotential::coulomb(1.0), Perturbation::none(), 2);
    CHECK(c.eps == doctest::Approx(c.alpha - 0.5));
    CHECK(c.s == doctest::Approx(1.0));
}

TEST_CASE("taylor residual vanishes to second order") {
    const ScatteringModel m = make_model(RadialPotential::coulomb(1.0), Perturbation::none(), 2);
    const Vec y = vec2(10.0, 3.0), z = vec2(0.2, -0.1);
    // R(z) = -(∇V₁(y+z) - ∇V₁(y) - ∇²V₁(y)z)
    const Vec exact = -(gradient_v1(m.v1, y + z) - gradient_v1(m.v1, y) - hessian_v1(m.v1, y) * z);
    CHECK((taylor_residual(m, y, z) - exact).norm() < 1e-14);
    CHECK(taylor_residual(m, y, Vec::Zero(2)).norm() == 0.0);
}

TEST_CASE("zero perturbation reproduces the radial solution") {
    ScatteringModel m = make_model(RadialPotential::coulomb(1.0), Perturbation::none(), 2);
    m.R0 = 2.0;
    const ScatteringData d{vec2(4.0, 1.0), vec2(1.0, 0.0), 0.3};
    const PerturbedSolution s = solve_mixed_perturbed(m, d);
    CHECK(s.z.max_norm() < 1e-12);
    CHECK((s.field.F - s.field.F1).norm() < 1e-12);
    CHECK((s.field.F1 - radial_field(m.v1, d.x, d.omega, d.lambda, m.opt.kappa0_sq)).norm() < 1e-12);
}

TEST_CASE("perturbed fixed point") {
    const ScatteringModel m = perturbed_model();
    for (double lam : {0.0, 0.3}) {
        const ScatteringData d{vec2(3.5, 0.8), vec2(1.0, 0.0), lam};
        const PerturbedSolution s = solve_mixed_perturbed(m, d);
        const FixedPointReport& r = s.report;
        CHECK(r.contraction_ratio <= 0.5);
        CHECK(r.cutoffs_inactive);
        CHECK(r.bound_slack > 0.0);
        CHECK(std::abs(r.energy_error) < 1e-6);
        CHECK(r.fixed_point_residual < 1e-8 * std::max(1.0, r.z_norm));
        CHECK((s.y.position(0) - d.x).norm() < 1e-12);
        CHECK((s.y.velocity(0) - s.field.F).norm() < 1e-12);
        CHECK((velocity_field(m, d.x, d.omega, lam) - s.field.F).norm() < 1e-12);
        // the perturbation pushes along +e₂
        CHECK(s.field.F(1) > s.field.F1(1));
    }
}

TEST_CASE("warm start reaches the same fixed point") {
    const ScatteringModel m = perturbed_model();
    const ScatteringData d{vec2(3.5, 0.8), vec2(1.0, 0.0), 0.0};
    const PerturbedSolution cold = solve_mixed_perturbed(m, d);
    const ScatteringData d2{vec2(3.5001, 0.8), d.omega, 0.0};
    const PerturbedSolution warm = solve_mixed_perturbed(m, d2, &cold.z);
    const PerturbedSolution ref = solve_mixed_perturbed(m, d2);
    CHECK(warm.report.iterations < ref.report.iterations);
    CHECK((warm.field.F - ref.field.F).norm() < 1e-9);
}

TEST_CASE("flow consistency") {
    const ScatteringModel m = perturbed_model();
    const FlowReport f = flow_consistency(m, {vec2(3.5, 0.8), vec2(1.0, 0.0), 0.0}, 4);
    REQUIRE(f.errors.size() == 4);
    CHECK(f.max_error < 1e-5);
}

TEST_CASE("lipschitz probe and cone selection") {
    ScatteringModel m = make_model(RadialPotential::coulomb(1.0),
                                   Perturbation::anisotropic_power(0.02, 1.0, 0.25, vec2(0.0, 1.0)), 2);
    const R0Selection sel = select_cone(m, {0.0});
    CHECK(sel.R0 >= 1.0);
    CHECK(m.R0 == sel.R0);
    CHECK(sel.contraction_ratio <= 0.5);
    CHECK(sel.lipschitz_ratio <= 0.5);
    CHECK(lipschitz_probe(m, {vec2(1.5 * m.R0, 0.3), vec2(1.0, 0.0), 0.0}, 4) <= 0.5);
}

TEST_CASE("data outside the cone is rejected") {
    const ScatteringModel m = perturbed_model();
    CHECK_THROWS_AS(solve_mixed_perturbed(m, {vec2(0.0, 5.0), vec2(1.0, 0.0), 0.0}), ConeError);
    CHECK_THROWS_AS(solve_mixed_perturbed(m, {vec2(1.5, 0.0), vec2(1.0, 0.0), 0.0}), ConeError);
}

TEST_CASE("truncated perturbations converge") {
    const ScatteringModel m = perturbed_model();
    const TruncationReport r = truncated_field_convergence(m, {vec2(3.5, 0.8), vec2(1.0, 0.0), 0.0}, {1e2, 1e4, 1e6});
    REQUIRE(r.field_deviation.size() == 3);
    CHECK(r.field_deviation[2] < r.field_deviation[1]);
    CHECK(r.field_deviation[1] < r.field_deviation[0]);
}

TEST_CASE("finite-difference jacobian") {
    auto f = [](const Vec& x) { return Vec(vec2(x(0) * x(1), std::sin(x(0)))); };
    const Mat J = jacobian_fd(f, vec2(0.5, 2.0), 1e-5);
    CHECK(J(0, 0) == doctest::Approx(2.0));
    CHECK(J(0, 1) == doctest::Approx(0.5));
    CHECK(J(1, 0) == doctest::Approx(std::cos(0.5)));
    CHECK(std::abs(J(1, 1)) < 1e-12);
}
