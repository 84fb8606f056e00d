#include "lowscat/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lowscat/quadrature.hpp"

namespace lowscat {

RadialPotential::RadialPotential(std::string name, DerivFn all, double mu, double eps1,
                                 double eps1_tilde)
    : name_(std::move(name)), all_(std::move(all)), mu_(mu), eps1_(eps1),
      eps1_tilde_(eps1_tilde) {
    if (!(mu > 0.0 && mu < 2.0)) throw DomainError("radial potential: mu must lie in (0,2)");
}

RadialPotential RadialPotential::power_law(double gamma, double mu) {
    if (!(gamma > 0.0)) throw DomainError("power_law: gamma must be positive");
    auto all = [gamma, mu](double r) {
        const double p = gamma * std::pow(r, -mu);
        return RadialDerivs{-p, mu * p / r, -mu * (mu + 1.0) * p / (r * r),
                            mu * (mu + 1.0) * (mu + 2.0) * p / (r * r * r)};
    };
    return RadialPotential("power_law", all, mu, gamma, 2.0 - mu);
}

RadialPotential RadialPotential::coulomb(double gamma) {
    if (!(gamma > 0.0)) throw DomainError("coulomb: gamma must be positive");
    auto all = [gamma](double r) {
        const double p = gamma / r;
        return RadialDerivs{-p, p / r, -2.0 * p / (r * r), 6.0 * p / (r * r * r)};
    };
    return RadialPotential("coulomb", all, 1.0, gamma, 1.0);
}

RadialPotential RadialPotential::power_law_plus_short_range(double gamma, double mu, double beta,
                                                            double nu) {
    if (!(gamma > 0.0) || beta < 0.0) throw DomainError("power_law_plus_short_range: bad strengths");
    if (!(nu > mu && nu < 2.0)) throw DomainError("power_law_plus_short_range: need mu < nu < 2");
    auto term = [](double c, double m, double r) {
        const double p = c * std::pow(r, -m);
        return RadialDerivs{-p, m * p / r, -m * (m + 1.0) * p / (r * r),
                            m * (m + 1.0) * (m + 2.0) * p / (r * r * r)};
    };
    auto all = [=](double r) {
        const RadialDerivs a = term(gamma, mu, r), b = term(beta, nu, r);
        return RadialDerivs{a.v + b.v, a.d1 + b.d1, a.d2 + b.d2, a.d3 + b.d3};
    };
    return RadialPotential("power_law_plus_short_range", all, mu, gamma, 2.0 - nu);
}

RadialPotential RadialPotential::free() {
    RadialPotential p("free", [](double) { return RadialDerivs{}; }, 1.0, 0.0, 0.0);
    p.free_ = true;
    return p;
}

RadialPotential RadialPotential::from_function(std::string name, Fn v, double mu, double eps1,
                                               double eps1_tilde) {
    // Steps grow with the order so that roundoff stays below truncation error.
    auto all = [v](double r) {
        RadialDerivs d;
        d.v = v(r);
        const double h1 = r * 1e-6, h2 = r * 1e-4, h3 = r * 1e-3;
        d.d1 = (v(r + h1) - v(r - h1)) / (2.0 * h1);
        d.d2 = (v(r + h2) - 2.0 * d.v + v(r - h2)) / (h2 * h2);
        d.d3 = (v(r + 2.0 * h3) - 2.0 * v(r + h3) + 2.0 * v(r - h3) - v(r - 2.0 * h3)) /
               (2.0 * h3 * h3 * h3);
        return d;
    };
    return RadialPotential(std::move(name), all, mu, eps1, eps1_tilde);
}

// ---------------------------------------------------------------------------

double step_below(double s, double e) {
    const double u = (s - 0.5 * e) / (0.25 * e);
    if (u <= 0.0) return 1.0;
    if (u >= 1.0) return 0.0;
    return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

double step_below_d1(double s, double e) {
    const double u = (s - 0.5 * e) / (0.25 * e);
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return -30.0 * u * u * (1.0 - u) * (1.0 - u) * (4.0 / e);
}

double step_below_d2(double s, double e) {
    const double u = (s - 0.5 * e) / (0.25 * e);
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double k = 4.0 / e;
    return -60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) * k * k;
}

Perturbation Perturbation::anisotropic_power(double strength, double mu, double eps2,
                                             const Vec& direction) {
    if (!(eps2 > 0.0)) throw DomainError("anisotropic_power: eps2 must be positive");
    if (direction.size() < 2) throw DomainError("anisotropic_power: dimension must be >= 2");
    const double m = mu + eps2 + 1.0;
    const Vec a = direction;
    Perturbation p;
    p.name_ = "anisotropic_power";
    p.eps2_ = eps2;
    p.dim_ = static_cast<int>(a.size());
    p.v_ = [=](const Vec& x) {
        return strength * a.dot(x) * std::pow(1.0 + x.squaredNorm(), -0.5 * m);
    };
    p.grad_ = [=](const Vec& x) -> Vec {
        const double w = 1.0 + x.squaredNorm();
        const double wm = std::pow(w, -0.5 * m);
        return strength * wm * (a - (m * a.dot(x) / w) * x);
    };
    p.hess_ = [=](const Vec& x) -> Mat {
        const double w = 1.0 + x.squaredNorm();
        const double ax = a.dot(x);
        const double c1 = strength * m * std::pow(w, -0.5 * m - 1.0);
        const double c2 = strength * m * (m + 2.0) * ax * std::pow(w, -0.5 * m - 2.0);
        Mat h = -c1 * (a * x.transpose() + x * a.transpose());
        h.diagonal().array() -= c1 * ax;
        h += c2 * x * x.transpose();
        return h;
    };
    return p;
}

Perturbation Perturbation::from_functions(std::string name, ValueFn v, GradFn grad, HessFn hess,
                                          double eps2, int dim) {
    Perturbation p;
    p.name_ = std::move(name);
    p.v_ = std::move(v);
    p.grad_ = std::move(grad);
    p.hess_ = std::move(hess);
    p.eps2_ = eps2;
    p.dim_ = dim;
    return p;
}

double Perturbation::value(const Vec& x) const { return v_ ? v_(x) : 0.0; }

Vec Perturbation::gradient(const Vec& x) const {
    return grad_ ? grad_(x) : Vec(Vec::Zero(x.size()));
}

Mat Perturbation::hessian(const Vec& x) const {
    return hess_ ? hess_(x) : Mat(Mat::Zero(x.size(), x.size()));
}

Perturbation Perturbation::truncated(double n) const {
    if (!(n > 0.0)) throw DomainError("truncation radius must be positive");
    if (is_zero()) {
        Perturbation p = *this;
        p.trunc_ = n;
        return p;
    }
    Perturbation base = *this;
    Perturbation p = *this;
    p.trunc_ = n;
    p.v_ = [base, n](const Vec& x) { return step_below(x.norm() / n, 1.0) * base.value(x); };
    p.grad_ = [base, n](const Vec& x) -> Vec {
        const double r = x.norm();
        const double c = step_below(r / n, 1.0);
        Vec gr = c * base.gradient(x);
        const double dc = step_below_d1(r / n, 1.0) / n;
        if (dc != 0.0) gr += base.value(x) * dc * (x / r);
        return gr;
    };
    p.hess_ = [base, n](const Vec& x) -> Mat {
        const double r = x.norm();
        const double c = step_below(r / n, 1.0);
        Mat h = c * base.hessian(x);
        const double dc = step_below_d1(r / n, 1.0) / n;
        if (dc != 0.0) {
            const double d2c = step_below_d2(r / n, 1.0) / (n * n);
            const Vec u = x / r;
            const Vec gc = dc * u;
            const Vec gv = base.gradient(x);
            Mat hc = d2c * u * u.transpose() +
                     (dc / r) * (Mat::Identity(x.size(), x.size()) - u * u.transpose());
            h += gc * gv.transpose() + gv * gc.transpose() + base.value(x) * hc;
        }
        return h;
    };
    return p;
}

double TotalPotential::value(const Vec& x) const { return v1.value(x.norm()) + v2.value(x); }

Vec TotalPotential::gradient(const Vec& x) const {
    return gradient_v1(v1, x) + v2.gradient(x);
}

// ---------------------------------------------------------------------------

namespace {

void require_radius(double r, const char* what) {
    if (!(r >= r_min)) throw DomainError(std::string(what) + ": radius below 1");
}

double tail_slope(const std::vector<double>& r, const std::vector<double>& y, double r_from) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < r.size(); ++i) {
        if (r[i] < r_from || !(y[i] > 0.0)) continue;
        const double lx = std::log(r[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 3) return 0.0;
    const double den = n * sxx - sx * sx;
    return den > 0 ? (n * sxy - sx * sy) / den : 0.0;
}

}  // namespace

double g(const RadialPotential& pot, double lambda, double r) {
    require_radius(r, "g");
    return std::sqrt(2.0 * lambda - 2.0 * pot.value(r));
}

double t_tilde(const RadialPotential& pot, double r) {
    require_radius(r, "t_tilde");
    if (r == 1.0) return 0.0;
    // integrate in u = ln ρ
    auto f = [&](double u) {
        const double rho = std::exp(u);
        return rho / std::sqrt(-2.0 * pot.value(rho));
    };
    return integrate(f, 0.0, std::log(r), 1e-13).value;
}

Vec gradient_v1(const RadialPotential& pot, const Vec& y) {
    const double r = y.norm();
    require_radius(r, "gradient_v1");
    return (pot.d1(r) / r) * y;
}

Mat hessian_v1(const RadialPotential& pot, const Vec& y) {
    const double r = y.norm();
    require_radius(r, "hessian_v1");
    const RadialDerivs d = pot.derivs(r);
    const Vec n = y / r;
    const Mat par = n * n.transpose();
    return d.d2 * par + (d.d1 / r) * (Mat::Identity(y.size(), y.size()) - par);
}

Vec third_contract_v1(const RadialPotential& pot, const Vec& y, const Vec& z) {
    const double r = y.norm();
    require_radius(r, "third_contract_v1");
    const RadialDerivs d = pot.derivs(r);
    const Vec n = y / r;
    const double nz = n.dot(z);
    const double a = d.d2 - d.d1 / r;
    return (d.d3 - 3.0 * a / r) * nz * nz * n + (a / r) * (2.0 * nz * z + z.squaredNorm() * n);
}

// ---------------------------------------------------------------------------

bool ConditionReport::all_positive() const {
    return margin_bound > 0 && margin_derivatives > 0 && margin_virial > 0 &&
           margin_perturbation > 0 && margin_mu_range > 0 && margin_eps2 >= 0 && feasible &&
           margin_hardy > 0 && margin_second > 0 && margin_velocity > 0;
}

ConditionReport check_conditions(const RadialPotential& pot, const Perturbation& pert,
                                 double r_max, int n_samples) {
    if (r_max < 10.0 || n_samples < 100)
        throw DomainError("check_conditions: need r_max >= 10 and n_samples >= 100");
    ConditionReport rep;
    const double mu = pot.mu();
    const double alpha = pot.alpha();
    rep.r.resize(n_samples);
    rep.t_tilde.resize(n_samples);
    const double lmax = std::log(r_max);
    for (int i = 0; i < n_samples; ++i) rep.r[i] = std::exp(lmax * i / (n_samples - 1));

    rep.t_tilde[0] = 0.0;
    for (int i = 1; i < n_samples; ++i) {
        auto f = [&](double u) {
            const double rho = std::exp(u);
            return rho / std::sqrt(-2.0 * pot.value(rho));
        };
        rep.t_tilde[i] = rep.t_tilde[i - 1] +
                         integrate(f, std::log(rep.r[i - 1]), std::log(rep.r[i]), 1e-13).value;
    }

    const double tail_from = r_max / 10.0;
    double min_bound = std::numeric_limits<double>::infinity();
    double min_virial = min_bound;
    std::vector<double> s0(n_samples), s1(n_samples), s2(n_samples), s3(n_samples);
    double l23 = -min_bound, l24 = -min_bound, l26 = -min_bound;
    for (int i = 0; i < n_samples; ++i) {
        const double r = rep.r[i];
        const RadialDerivs d = pot.derivs(r);
        const double rm = std::pow(r, mu);
        min_bound = std::min(min_bound, -d.v * rm);
        min_virial = std::min(min_virial, 2.0 + r * d.d1 / d.v);
        s0[i] = std::abs(d.v) * rm;
        s1[i] = std::abs(d.d1) * rm * r;
        s2[i] = std::abs(d.d2) * rm * r * r;
        s3[i] = std::abs(d.d3) * rm * r * r * r;
        if (r >= tail_from) {
            const double tt = rep.t_tilde[i];
            l23 = std::max(l23, d.d1 / r * tt * tt);
            l24 = std::max(l24, d.d2 * tt * tt);
            l26 = std::max(l26, -d.d1 / std::sqrt(-2.0 * d.v) * tt);
        }
    }
    rep.margin_bound = min_bound;
    rep.margin_virial = min_virial;
    double worst = -1e300;
    for (auto* s : {&s0, &s1, &s2, &s3}) worst = std::max(worst, tail_slope(rep.r, *s, tail_from));
    rep.margin_derivatives = 0.05 - worst;
    rep.margin_mu_range = std::min(mu, 2.0 - mu);

    rep.eps2 = pert.is_zero() ? (2.0 - mu) / 4.0 : pert.eps2();
    rep.margin_eps2 = (2.0 - mu) / 4.0 - rep.eps2;

    if (pert.is_zero() || pert.dim() < 1) {
        rep.margin_perturbation = 0.05;
    } else {
        const int d = pert.dim();
        std::vector<Vec> dirs;
        for (int k = 0; k < d; ++k) {
            dirs.push_back(Vec::Unit(d, k));
            dirs.push_back(-Vec::Unit(d, k));
        }
        dirs.push_back(Vec::Ones(d) / std::sqrt(double(d)));
        double w = -1e300;
        const double m = mu + rep.eps2;
        for (const Vec& u : dirs) {
            std::vector<double> p0(n_samples), p1(n_samples), p2(n_samples);
            for (int i = 0; i < n_samples; ++i) {
                const Vec x = rep.r[i] * u;
                const double br = std::sqrt(1.0 + x.squaredNorm());
                p0[i] = std::abs(pert.value(x)) * std::pow(br, m);
                p1[i] = pert.gradient(x).norm() * std::pow(br, m + 1.0);
                p2[i] = pert.hessian(x).norm() * std::pow(br, m + 2.0);
            }
            for (auto* s : {&p0, &p1, &p2}) w = std::max(w, tail_slope(rep.r, *s, tail_from));
        }
        rep.margin_perturbation = 0.05 - w;
    }

    rep.limsup_hardy = l23;
    rep.limsup_second = l24;
    rep.limsup_velocity = l26;
    const double lo = std::max({0.0, 1.0 - alpha * (mu + 2.0 * rep.eps2), 2.0 * l26 - 1.0});
    const double cap = 1.0 - 4.0 * std::max(l23, l24);
    rep.eps_bar_lo = lo;
    rep.eps_bar_hi = cap > 0.0 ? std::min(1.0, std::sqrt(cap)) : 0.0;
    rep.feasible = rep.eps_bar_hi > rep.eps_bar_lo;
    rep.eps_bar = rep.feasible ? 0.5 * (rep.eps_bar_lo + rep.eps_bar_hi) : 0.0;
    const double e = rep.eps_bar;
    rep.margin_hardy = 0.25 * (1.0 - e * e) - l23;
    rep.margin_second = 0.25 * (1.0 - e * e) - l24;
    rep.margin_velocity = 0.5 * (1.0 + e) - l26;
    return rep;
}

}  // namespace lowscat
