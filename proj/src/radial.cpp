#include "lowscat/radial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lowscat/quadrature.hpp"
#include "lowscat/roots.hpp"

namespace lowscat {

namespace {

constexpr double pi = std::numbers::pi;

// s²g(sr₁)²/g(r₁)² - 1, with a Taylor branch near s = 1 to avoid cancellation.
struct ScaledSpeed {
    const RadialPotential& pot;
    double lambda, r1, g1sq;
    RadialDerivs d1;

    ScaledSpeed(const RadialPotential& p, double lam, double r)
        : pot(p), lambda(lam), r1(r), d1(p.derivs(r)) {
        g1sq = 2.0 * lambda - 2.0 * d1.v;
    }

    double q(double s) const {
        const double dl = s - 1.0;
        double w;  // s²V(sr₁) - V(r₁)
        if (std::abs(dl) < 1e-4) {
            const double r = r1;
            const double c1 = 2.0 * d1.v + r * d1.d1;
            const double c2 = d1.v + 2.0 * r * d1.d1 + 0.5 * r * r * d1.d2;
            const double c3 = r * d1.d1 + r * r * d1.d2 + r * r * r * d1.d3 / 6.0;
            w = dl * (c1 + dl * (c2 + dl * c3));
        } else {
            w = s * s * pot.value(s * r1) - d1.v;
        }
        return (2.0 * lambda * dl * (s + 1.0) - 2.0 * w) / g1sq;
    }
};

double tail_power(const RadialPotential& pot) { return 2.0 / (2.0 - pot.mu()); }

// I(κ) = ∫₁^∞ s^{-1}(s²h(s) - κ²)^{-1/2} ds, so that θ₁ = -κ I(κ).
double angle_integral(const RadialPotential& pot, double lambda, double r1, double kappa) {
    ScaledSpeed sp(pot, lambda, r1);
    const double gap = (1.0 - kappa) * (1.0 + kappa);
    auto f = [&](double s) {
        const double a = sp.q(s) + gap;
        if (!(a > 0.0)) {
            if (a == 0.0 && s == 1.0) return 0.0;
            throw AdmissibilityError("radial: orbit would turn before reaching infinity");
        }
        return 1.0 / (s * std::sqrt(a));
    };
    auto inner = [&](double u) { return u == 0.0 ? 0.0 : 2.0 * u * f(1.0 + u * u); };
    // u = 0 is never sampled by Kronrod nodes; guard kept for clarity
    const double a = integrate(inner, 0.0, 1.0, 1e-13).value;
    const double b = integrate_tail(f, 2.0, tail_power(pot), 1e-13).value;
    return a + b;
}

void check_r1(double r1) {
    if (!(r1 >= r_min)) throw DomainError("radial: r1 below 1");
}

}  // namespace

bool Cone::contains(const Vec& x) const {
    const double n = x.norm();
    if (n < R * (1.0 - 1e-12)) return false;
    return sign * x.dot(omega) >= (1.0 - sigma) * n * (1.0 - 1e-12);
}

double turning_point(const RadialPotential& pot, double lambda, double L) {
    if (lambda < 0.0) throw DomainError("turning_point: negative energy");
    if (lambda == 0.0 && L == 0.0) return 0.0;
    const double L2 = L * L;
    auto f = [&](double r) { return r * r * (2.0 * lambda - 2.0 * pot.value(r)) - L2; };
    const double f1 = f(1.0);
    if (f1 > 0.0) throw NoTurningPoint("turning_point: root lies below r = 1");
    if (f1 == 0.0) return 1.0;
    double lo = 1.0, hi = 2.0, fhi = f(hi);
    while (fhi <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw NoTurningPoint("turning_point: no root found");
        fhi = f(hi);
    }
    const double r = brent(f, lo, hi, f(lo), fhi, 0.0);
    // one Newton polish with the analytic derivative
    const RadialDerivs d = pot.derivs(r);
    const double df = 2.0 * r * (2.0 * lambda - 2.0 * d.v) - 2.0 * r * r * d.d1;
    const double rn = r - f(r) / df;
    return std::abs(f(rn)) < std::abs(f(r)) ? rn : r;
}

double theta1_of_kappa(const RadialPotential& pot, double lambda, double r1, double kappa) {
    check_r1(r1);
    if (std::abs(kappa) > 1.0) throw AdmissibilityError("theta1: |kappa| exceeds 1");
    if (kappa == 0.0) return 0.0;
    return -kappa * angle_integral(pot, lambda, r1, std::abs(kappa));
}

double theta1_of_L(const RadialPotential& pot, double lambda, double r1, double L,
                   double kappa0_sq) {
    check_r1(r1);
    const double kappa = L / (r1 * g(pot, lambda, r1));
    if (kappa * kappa > kappa0_sq)
        throw AdmissibilityError("theta1_of_L: kappa^2 = " + std::to_string(kappa * kappa) +
                                 " exceeds kappa0^2 = " + std::to_string(kappa0_sq));
    return theta1_of_kappa(pot, lambda, r1, kappa);
}

double theta_tp(const RadialPotential& pot, double lambda, double L) {
    const double rtp = turning_point(pot, lambda, L);
    if (rtp < r_min) throw NoTurningPoint("theta_tp: no turning point at or above r = 1");
    const double mag = angle_integral(pot, lambda, rtp, 1.0);
    return L >= 0.0 ? -mag : mag;
}

double allowed_angle(const RadialPotential& pot, double lambda, double r1) {
    check_r1(r1);
    return angle_integral(pot, lambda, r1, 1.0);
}

double L_of_theta1(const RadialPotential& pot, double lambda, double r1, double theta1,
                   double kappa0_sq) {
    check_r1(r1);
    if (theta1 == 0.0) return 0.0;
    const double target = std::abs(theta1);
    const double k0 = std::sqrt(std::min(1.0, kappa0_sq));
    const double top = k0 * angle_integral(pot, lambda, r1, k0);
    if (target > top)
        throw AdmissibilityError("L_of_theta1: |theta1| = " + std::to_string(target) +
                                 " beyond the admissible angle " + std::to_string(top) +
                                 " (floor pi/2 - arctan sqrt(C-1))");
    auto f = [&](double k) { return k * angle_integral(pot, lambda, r1, k) - target; };
    const double k = brent(f, 0.0, k0, -target, top - target, 1e-17);
    const double L = k * r1 * g(pot, lambda, r1);
    return theta1 < 0.0 ? L : -L;
}

double allowed_angle_floor(const RadialPotential& pot, double r_max, int n) {
    std::vector<double> a(n);
    const double lm = std::log(r_max);
    for (int i = 0; i < n; ++i) a[i] = std::abs(pot.value(std::exp(lm * i / (n - 1))));
    double suffix = 0.0, C = 1.0;
    for (int i = n - 1; i >= 0; --i) {
        suffix = std::max(suffix, a[i]);
        C = std::max(C, suffix / a[i]);
    }
    return pi / 2.0 - std::atan(std::sqrt(C - 1.0));
}

double default_sigma0(const RadialPotential& pot) {
    return 1.0 - std::cos(0.9 * allowed_angle_floor(pot));
}

PlanarOrbit make_planar_orbit(const RadialPotential& pot, double lambda, double r1, double theta1,
                              double kappa0_sq) {
    PlanarOrbit o;
    o.lambda = lambda;
    o.r1 = r1;
    o.theta1 = theta1;
    o.L = L_of_theta1(pot, lambda, r1, theta1, kappa0_sq);
    o.kappa = o.L / (r1 * g(pot, lambda, r1));
    // 0 when the turning point would sit inside the unmodelled core
    try {
        o.r_tp = turning_point(pot, lambda, o.L);
    } catch (const NoTurningPoint&) {
        o.r_tp = 0.0;
    }
    return o;
}

namespace {

// G(r0 + h) = 2λ - 2V - L²/r², written as G(r0) plus the increment. Close to r0 the
// increment is ∫V' by Gauss-Legendre: the direct difference is rounding noise when r0
// is a turning point.
struct RadialGap {
    const RadialPotential& pot;
    double lambda, L, r0, g0;

    RadialGap(const RadialPotential& p, double lam, double l, double r)
        : pot(p), lambda(lam), L(l), r0(r) {
        // r0 lies on the orbit, so a negative gap there is rounding
        g0 = std::max(0.0, 2.0 * lambda - 2.0 * pot.value(r) - L * L / (r * r));
    }

    double operator()(double h) const {
        const double r = r0 + h;
        if (h > 0.1 * r0) return 2.0 * lambda - 2.0 * pot.value(r) - L * L / (r * r);
        // integrate over [0, h] rather than [r0, r]: r0 + h drops most of a tiny h
        const double dv = integrate_fixed([&](double s) { return pot.d1(r0 + s); }, 0.0, h, 1, 10);
        return g0 - 2.0 * dv + L * L * h * (2.0 * r0 + h) / (r0 * r0 * r * r);
    }
};

}  // namespace

TimeRadiusMap::TimeRadiusMap(const RadialPotential& pot, double lambda, double L, double r1)
    : pot_(pot), lambda_(lambda), L_(L), r1_(r1) {
    check_r1(r1);
}

double TimeRadiusMap::segment(double ra, double rb) const {
    const RadialGap gap(pot_, lambda_, L_, ra);
    auto f = [&](double u) {
        if (u == 0.0) return 0.0;
        const double G = gap(u * u);
        return G > 0.0 ? 2.0 * u / std::sqrt(G) : 0.0;
    };
    return integrate(f, 0.0, std::sqrt(rb - ra), 1e-13).value;
}

double TimeRadiusMap::t_of_r(double r) const {
    if (r < r1_) throw DomainError("time_radius_map: r below r1");
    return 1.0 + segment(r1_, r);
}

double TimeRadiusMap::r_of_t(double t) const {
    if (t < 1.0) throw DomainError("time_radius_map: t below 1");
    if (t == 1.0) return r1_;
    double hi = 2.0 * r1_;
    while (t_of_r(hi) < t) hi *= 2.0;
    auto f = [&](double r) { return t_of_r(r) - t; };
    return brent(f, r1_, hi, 1.0 - t, f(hi), 1e-15 * hi);
}

std::vector<double> log_time_grid(double t_max, int intervals) {
    if (!(t_max > 1.0) || intervals < 1) throw DomainError("log_time_grid: bad parameters");
    std::vector<double> t(intervals + 1);
    const double h = std::log(t_max) / intervals;
    for (int i = 0; i <= intervals; ++i) t[i] = std::exp(h * i);
    t[0] = 1.0;
    t[intervals] = t_max;
    return t;
}

namespace {

// Advances r by solving ∫_r^{r+X} G^{-1/2} = dt; returns X and the θ increment.
struct RadialStepper {
    const RadialPotential& pot;
    double lambda, L;

    double G(double r) const { return 2.0 * lambda - 2.0 * pot.value(r) - L * L / (r * r); }

    template <typename W>
    double seg(double r, double X, W&& weight) const {
        const RadialGap gap(pot, lambda, L, r);
        auto f = [&](double u) {
            const double g = gap(u * u);
            return g > 0.0 ? 2.0 * u * weight(r + u * u) / std::sqrt(g) : 0.0;
        };
        const double su = std::sqrt(X);
        QuadResult q = gauss_kronrod15(f, 0.0, su);
        if (q.error > 1e-14 * std::abs(q.value)) q = integrate(f, 0.0, su, 1e-14);
        return q.value;
    }

    std::pair<double, double> step(double r, double dt) const {
        const RadialDerivs d = pot.derivs(r);
        const double G0 = std::max(0.0, 2.0 * lambda - 2.0 * d.v - L * L / (r * r));
        const double G1 = -2.0 * d.d1 + 2.0 * L * L / (r * r * r);
        double X;
        if (G1 > 0.0) {
            const double a = 0.5 * dt * G1 + std::sqrt(G0);
            X = (a * a - G0) / G1;
        } else {
            X = dt * std::sqrt(G0);
        }
        auto one = [](double) { return 1.0; };
        for (int it = 0; it < 60; ++it) {
            const double phi = seg(r, X, one) - dt;
            const double dX = phi * std::sqrt(G(r + X));
            double Xn = X - dX;
            if (!(Xn > 0.0)) Xn = 0.5 * X;
            const bool done = std::abs(Xn - X) <= 1e-15 * (r + X);
            X = Xn;
            if (done) {
                const double dth = L == 0.0 ? 0.0 : L * seg(r, X, [](double p) { return 1.0 / (p * p); });
                return {X, dth};
            }
        }
        throw ConvergenceError("planar_orbit_trajectory: radius step did not converge");
    }
};

}  // namespace

Trajectory planar_orbit_trajectory(const RadialPotential& pot, const PlanarOrbit& orbit,
                                   const std::vector<double>& times) {
    if (times.empty() || times[0] != 1.0)
        throw DomainError("planar_orbit_trajectory: grid must start at t = 1");
    const int n = static_cast<int>(times.size());
    Trajectory tr;
    tr.times = times;
    tr.lambda = orbit.lambda;
    tr.positions.resize(2, n);
    tr.velocities.resize(2, n);
    tr.energy.resize(n);
    RadialStepper st{pot, orbit.lambda, orbit.L};
    double r = orbit.r1, th = orbit.theta1;
    for (int k = 0; k < n; ++k) {
        if (k > 0) {
            const double dt = times[k] - times[k - 1];
            if (!(dt > 0.0)) throw DomainError("planar_orbit_trajectory: times not increasing");
            auto [X, dth] = st.step(r, dt);
            r += X;
            th += dth;
        }
        const double rdot = std::sqrt(std::max(0.0, st.G(r)));
        const double rthdot = orbit.L / r;
        const double c = std::cos(th), s = std::sin(th);
        tr.positions.col(k) << r * c, r * s;
        tr.velocities.col(k) << rdot * c - rthdot * s, rdot * s + rthdot * c;
        tr.energy[k] = 0.5 * tr.velocities.col(k).squaredNorm() + pot.value(r);
    }
    return tr;
}

namespace {

// Unit vector e along x̂ - (x̂·ω)ω, or empty when x̂ is (anti)parallel to ω.
bool transverse_unit(const Vec& xhat, const Vec& omega, Vec& e) {
    e = xhat - xhat.dot(omega) * omega;
    const double s = e.norm();
    if (s < 1e-12) return false;
    e /= s;
    return true;
}

}  // namespace

Trajectory embed(const Vec& x, const Vec& omega, const Trajectory& planar) {
    const Vec xhat = x.normalized();
    Vec e;
    const bool generic = transverse_unit(xhat, omega, e);
    Trajectory tr;
    tr.times = planar.times;
    tr.lambda = planar.lambda;
    tr.energy = planar.energy;
    if (generic) {
        tr.positions = omega * planar.positions.row(0) - e * planar.positions.row(1);
        tr.velocities = omega * planar.velocities.row(0) - e * planar.velocities.row(1);
    } else {
        tr.positions = xhat * planar.positions.row(0);
        tr.velocities = xhat * planar.velocities.row(0);
    }
    return tr;
}

namespace {

double angle_between(const Vec& xhat, const Vec& omega) {
    return std::atan2((xhat - xhat.dot(omega) * omega).norm(), xhat.dot(omega));
}

void check_data(const RadialPotential& pot, const Vec& x, const Vec& omega, double lambda,
                double sigma) {
    if (x.size() < 2 || x.size() != omega.size())
        throw DomainError("mixed problem: dimension mismatch or d < 2");
    if (std::abs(omega.norm() - 1.0) > 1e-8) throw DomainError("mixed problem: omega not unit");
    if (lambda < 0.0) throw DomainError("mixed problem: negative energy");
    if (x.norm() < r_min) throw DomainError("mixed problem: |x| below 1");
    const double s = sigma < 0.0 ? default_sigma0(pot) : sigma;
    Cone cone{1.0, s, omega, +1};
    if (!cone.contains(x)) throw ConeError("mixed problem: x outside the outgoing cone");
}

}  // namespace

MixedRadialSolution solve_mixed_radial(const RadialPotential& pot, const ScatteringData& data,
                                       const std::vector<double>& times,
                                       const RadialOptions& opt) {
    check_data(pot, data.x, data.omega, data.lambda, opt.sigma);
    const double r1 = data.x.norm();
    const Vec xhat = data.x / r1;
    MixedRadialSolution sol;
    sol.orbit = make_planar_orbit(pot, data.lambda, r1, -angle_between(xhat, data.omega),
                                  opt.kappa0_sq);
    sol.trajectory = embed(data.x, data.omega, planar_orbit_trajectory(pot, sol.orbit, times));
    sol.F1 = sol.trajectory.velocity(0);
    return sol;
}

Vec radial_field(const RadialPotential& pot, const Vec& x, const Vec& omega, double lambda,
                 double kappa0_sq) {
    const double r1 = x.norm();
    if (r1 < r_min) throw DomainError("radial_field: |x| below 1");
    const Vec xhat = x / r1;
    const double th = -angle_between(xhat, omega);
    const double g1 = g(pot, lambda, r1);
    const double L = L_of_theta1(pot, lambda, r1, th, kappa0_sq);
    const double k = L / (r1 * g1);
    const double rd = std::sqrt((1.0 - k) * (1.0 + k));
    const double c = std::cos(th), s = std::sin(th);
    const double p1 = g1 * (rd * c - k * s), p2 = g1 * (rd * s + k * c);
    Vec e;
    if (!transverse_unit(xhat, omega, e)) return p1 * xhat;
    return p1 * omega - p2 * e;
}

double kappa_sensitivity(const RadialPotential& pot, double lambda, double r1) {
    check_r1(r1);
    const double g1 = g(pot, lambda, r1);
    auto f = [&](double s) { return g1 / (s * s * std::sqrt(2.0 * lambda - 2.0 * pot.value(s * r1))); };
    const double a = integrate(f, 1.0, 2.0, 1e-13).value;
    const double b = integrate_tail(f, 2.0, tail_power(pot), 1e-13).value;
    const double I = a + b;
    return 1.0 / (I * I);
}

}  // namespace lowscat
