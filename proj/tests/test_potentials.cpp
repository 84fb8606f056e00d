#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lowscat/potentials.hpp"

using namespace lowscat;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("power law values and derivatives") {
    const RadialPotential v = RadialPotential::power_law(2.0, 0.5);
    const double r = 3.0;
    CHECK(v.value(r) == doctest::Approx(-2.0 * std::pow(r, -0.5)));
    CHECK(v.d1(r) == doctest::Approx(1.0 * std::pow(r, -1.5)));
    CHECK(v.d2(r) == doctest::Approx(-1.5 * std::pow(r, -2.5)));
    CHECK(v.d3(r) == doctest::Approx(3.75 * std::pow(r, -3.5)));
    CHECK(v.alpha() == doctest::Approx(0.8));
    CHECK(RadialPotential::coulomb(1.0).mu() == 1.0);
}

TEST_CASE("finite-difference derivatives of a user potential") {
    const RadialPotential a = RadialPotential::power_law_plus_short_range(1.0, 0.7, 0.5, 1.4);
    const RadialPotential b = RadialPotential::from_function(
        "same", [](double r) { return -std::pow(r, -0.7) - 0.5 * std::pow(r, -1.4); }, 0.7, 0.7, 0.7);
    for (double r : {1.0, 2.0, 40.0}) {
        CHECK(b.d1(r) == doctest::Approx(a.d1(r)).epsilon(1e-7));
        CHECK(b.d2(r) == doctest::Approx(a.d2(r)).epsilon(1e-5));
    }
}

TEST_CASE("radial gradient, hessian and third derivative") {
    const RadialPotential v = RadialPotential::coulomb(1.0);
    const Vec y = vec2(3.0, 4.0);
    const Vec gr = gradient_v1(v, y);
    CHECK(gr(0) == doctest::Approx(3.0 / 125.0));
    CHECK(gr(1) == doctest::Approx(4.0 / 125.0));
    const Mat h = hessian_v1(v, y);
    // ∂ᵢ∂ⱼ(-1/r) = (δᵢⱼ r² - 3xᵢxⱼ)/r⁵
    CHECK(h(0, 0) == doctest::Approx((25.0 - 27.0) / 3125.0));
    CHECK(h(0, 1) == doctest::Approx(-36.0 / 3125.0));
    const Vec z = vec2(0.3, -0.2);
    const double e = 1e-4;
    const Vec fd = (gradient_v1(v, y + e * z) - 2.0 * gradient_v1(v, y) + gradient_v1(v, y - e * z)) / (e * e);
    const Vec t = third_contract_v1(v, y, z);
    CHECK((t - fd).norm() < 1e-6 * t.norm());
}

TEST_CASE("anisotropic perturbation and its truncation") {
    const Perturbation p = Perturbation::anisotropic_power(0.1, 1.0, 0.25, vec2(0.0, 1.0));
    const Vec x = vec2(2.0, 1.0);
    const double br = std::sqrt(1.0 + x.squaredNorm());
    CHECK(p.value(x) == doctest::Approx(0.1 * 1.0 * std::pow(br, -2.25)));
    const double e = 1e-6;
    for (int i = 0; i < 2; ++i) {
        Vec d = Vec::Zero(2);
        d(i) = e;
        CHECK(p.gradient(x)(i) == doctest::Approx((p.value(x + d) - p.value(x - d)) / (2 * e)).epsilon(1e-7));
        CHECK((p.hessian(x).col(i) - (p.gradient(x + d) - p.gradient(x - d)) / (2 * e)).norm() < 1e-8);
    }
    const Perturbation pn = p.truncated(10.0);
    CHECK(pn.value(x) == p.value(x));
    CHECK(pn.value(vec2(0.0, 8.0)) == 0.0);
    CHECK(pn.truncation_radius().value() == 10.0);
    CHECK(Perturbation::none().is_zero());
}

TEST_CASE("smooth step") {
    CHECK(step_below(0.4, 1.0) == 1.0);
    CHECK(step_below(0.8, 1.0) == 0.0);
    const double s = 0.6, e = 1e-6;
    CHECK(step_below_d1(s, 1.0) == doctest::Approx((step_below(s + e, 1.0) - step_below(s - e, 1.0)) / (2 * e)).epsilon(1e-6));
    CHECK(step_below_d2(s, 1.0) == doctest::Approx((step_below_d1(s + e, 1.0) - step_below_d1(s - e, 1.0)) / (2 * e)).epsilon(1e-5));
}

TEST_CASE("zero-energy arrival time") {
    // Coulomb: ∫₁^r ρ^{1/2}/√2 dρ
    const RadialPotential v = RadialPotential::coulomb(1.0);
    const double r = 50.0;
    CHECK(t_tilde(v, r) == doctest::Approx((std::pow(r, 1.5) - 1.0) * std::sqrt(2.0) / 3.0).epsilon(1e-12));
    CHECK(g(v, 0.5, 4.0) == doctest::Approx(std::sqrt(1.5)));
}

TEST_CASE("condition margins") {
    const ConditionReport c = check_conditions(RadialPotential::coulomb(1.0), Perturbation::none());
    CHECK(c.margin_mu_range == doctest::Approx(1.0));
    CHECK(c.margin_bound > 0.0);
    CHECK(c.margin_virial == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(c.feasible);
    CHECK(c.all_positive());
    CHECK(c.limsup_hardy == doctest::Approx(2.0 / 9.0).epsilon(1e-2));
    const ConditionReport bad = check_conditions(
        RadialPotential::coulomb(1.0), Perturbation::anisotropic_power(0.1, 1.0, 0.4, vec2(1.0, 0.0)));
    CHECK(bad.margin_eps2 < 0.0);
}
