#include "lowscat/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lowscat/ode.hpp"

namespace lowscat {

PotentialField PotentialField::of(const TotalPotential& v) {
    return {[v](const Vec& x) { return v.value(x); },
            [v](const Vec& x) -> Vec { return v.gradient(x); }};
}

namespace {

Trajectory run_newton(const PotentialField& v, const Vec& x0, const Vec& v0, double t0, double t1,
                      double tol, const std::vector<double>* times) {
    if (x0.size() != v0.size() || x0.size() < 1) throw DomainError("integrate_newton: bad state");
    if (x0.norm() < r_min) throw CoreEntryError("integrate_newton: start inside |x| < 1");
    if (tol < 1e-13 || tol > 1e-6) throw DomainError("integrate_newton: tol outside [1e-13,1e-6]");
    const int d = static_cast<int>(x0.size());
    OdeRhs rhs = [&](double, const Vec& y, Vec& dy) {
        const Vec x = y.head(d);
        if (x.norm() < r_min) throw CoreEntryError("integrate_newton: orbit entered |x| < 1");
        dy.head(d) = y.tail(d);
        dy.tail(d) = -v.gradient(x);
    };
    std::vector<double> ts;
    std::vector<Vec> ys;
    size_t next = 0;
    OdeObserver obs = [&](double t, const Vec& y, const Vec&) {
        if (y.head(d).norm() < r_min)
            throw CoreEntryError("integrate_newton: orbit entered |x| < 1 at t = " +
                                 std::to_string(t));
        if (!times) {
            ts.push_back(t);
            ys.push_back(y);
        } else {
            while (next < times->size() && (*times)[next] == t) {
                ts.push_back(t);
                ys.push_back(y);
                ++next;
            }
        }
        return true;
    };
    Vec y0(2 * d);
    y0 << x0, v0;
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol;
    dopri5(rhs, t0, y0, t1, opt, obs, times ? *times : std::vector<double>{});

    Trajectory tr;
    const int n = static_cast<int>(ts.size());
    tr.times = ts;
    tr.positions.resize(d, n);
    tr.velocities.resize(d, n);
    tr.energy.resize(n);
    for (int k = 0; k < n; ++k) {
        tr.positions.col(k) = ys[k].head(d);
        tr.velocities.col(k) = ys[k].tail(d);
        tr.energy[k] = 0.5 * ys[k].tail(d).squaredNorm() + v.value(ys[k].head(d));
    }
    tr.lambda = n ? tr.energy.front() : 0.0;
    if (t1 < t0) {
        // keep times increasing
        std::reverse(tr.times.begin(), tr.times.end());
        tr.positions = tr.positions.rowwise().reverse().eval();
        tr.velocities = tr.velocities.rowwise().reverse().eval();
        std::reverse(tr.energy.begin(), tr.energy.end());
    }
    return tr;
}

}  // namespace

Trajectory integrate_newton(const PotentialField& v, const Vec& x0, const Vec& v0, double t0,
                            double t1, double tol) {
    return run_newton(v, x0, v0, t0, t1, tol, nullptr);
}

Trajectory integrate_newton(const PotentialField& v, const Vec& x0, const Vec& v0,
                            const std::vector<double>& times, double tol) {
    if (times.size() < 2) throw DomainError("integrate_newton: need at least two output times");
    const bool fwd = times.back() > times.front();
    for (size_t i = 1; i < times.size(); ++i)
        if ((times[i] > times[i - 1]) != fwd)
            throw DomainError("integrate_newton: output times not monotone");
    return run_newton(v, x0, v0, times.front(), times.back(), tol, &times);
}

Mat angular_momentum(const Vec& x, const Vec& v) {
    return x * v.transpose() - v * x.transpose();
}

double loglog_slope(const std::vector<double>& t, const std::vector<double>& y, double t_lo,
                    double t_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi || !(y[i] > 0.0) || !(t[i] > 0.0)) continue;
        const double lx = std::log(t[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

// Indices of at most `m` samples, log-spaced in time over [t_lo, t_end].
std::vector<int> window(const Trajectory& tr, double t_lo, int m) {
    std::vector<int> all;
    for (int k = 0; k < tr.size(); ++k)
        if (tr.times[k] >= t_lo) all.push_back(k);
    if (static_cast<int>(all.size()) <= m) return all;
    std::vector<int> out;
    const double l0 = std::log(tr.times[all.front()]), l1 = std::log(tr.times[all.back()]);
    size_t j = 0;
    for (int i = 0; i < m; ++i) {
        const double target = std::exp(l0 + (l1 - l0) * i / (m - 1));
        while (j + 1 < all.size() && tr.times[all[j]] < target) ++j;
        if (out.empty() || out.back() != all[j]) out.push_back(all[j]);
    }
    return out;
}

struct DirectionFit {
    Vec limit;
    double p = std::numeric_limits<double>::quiet_NaN();
    double residual = 0.0;
};

// Fit u(t) = u∞ + c t^{-p} (vector c) by variable projection over p.
DirectionFit fit_direction(const std::vector<double>& t, const std::vector<Vec>& u) {
    const int n = static_cast<int>(t.size());
    const int d = static_cast<int>(u[0].size());
    DirectionFit fit;
    double spread = 0.0;
    for (const Vec& v : u) spread = std::max(spread, (v - u.back()).norm());
    if (spread < 1e-13) {
        fit.limit = u.back().normalized();
        return fit;
    }
    Mat U(n, d);
    for (int i = 0; i < n; ++i) U.row(i) = u[i].transpose();
    auto solve = [&](double p, Mat& coef) {
        Mat A(n, 2);
        for (int i = 0; i < n; ++i) A.row(i) << 1.0, std::pow(t[i], -p);
        coef = A.colPivHouseholderQr().solve(U);
        return (A * coef - U).squaredNorm();
    };
    Mat coef;
    double best_p = 0.01, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 80; ++i) {
        const double p = 0.01 * std::pow(300.0, i / 80.0);
        const double r = solve(p, coef);
        if (r < best) {
            best = r;
            best_p = p;
        }
    }
    // golden-section refine in log p
    const double step = std::log(300.0) / 80.0;
    double a = std::log(best_p) - step, b = std::log(best_p) + step;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = solve(std::exp(x1), coef), f2 = solve(std::exp(x2), coef);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = solve(std::exp(x1), coef);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = solve(std::exp(x2), coef);
        }
    }
    fit.p = std::exp(0.5 * (a + b));
    fit.residual = std::sqrt(solve(fit.p, coef) / n);
    fit.limit = coef.row(0).transpose().normalized();
    return fit;
}

}  // namespace

AsymptoticReport omega_plus(const Trajectory& traj) {
    const int n = traj.size();
    if (n < 10) throw DomainError("omega_plus: trajectory too short");
    const double t_end = traj.times.back();
    const double r0 = traj.position(0).norm();
    if (traj.position(n - 1).norm() < 100.0 * r0)
        throw DomainError("omega_plus: trajectory must reach |x| >= 100 |x(0)|");
    for (int k = 0; k < n; ++k) {
        if (traj.times[k] < t_end / 10.0) continue;
        if (traj.position(k).dot(traj.velocity(k)) <= 0.0)
            throw NoMatch("omega_plus: orbit is not escaping over the last decade");
    }
    double t_lo = t_end / 100.0;
    if (t_lo <= traj.times.front()) t_lo = traj.times[n / 2];
    const std::vector<int> idx = window(traj, t_lo, 2000);
    std::vector<double> ts;
    std::vector<Vec> om, omt;
    std::vector<double> rx, rv, rl;
    for (int k : idx) {
        const Vec x = traj.position(k), v = traj.velocity(k);
        ts.push_back(traj.times[k]);
        om.push_back(x.normalized());
        omt.push_back(v.normalized());
        rx.push_back(x.norm());
        rv.push_back(v.norm());
        rl.push_back(angular_momentum(x, v).cwiseAbs().maxCoeff());
    }
    AsymptoticReport rep;
    const DirectionFit f1 = fit_direction(ts, om);
    const DirectionFit f2 = fit_direction(ts, omt);
    rep.omega_plus = f1.limit;
    rep.omega_tilde_plus = f2.limit;
    rep.decay_exponent_fit = f1.p;
    rep.omega_residual = (om.back() - rep.omega_plus).norm();
    rep.t_first = ts.front();
    rep.t_last = ts.back();
    rep.position_growth = loglog_slope(ts, rx, ts.front(), ts.back());
    rep.velocity_growth = loglog_slope(ts, rv, ts.front(), ts.back());
    double lmax = 0.0;
    for (double v : rl) lmax = std::max(lmax, v);
    rep.angular_momentum_growth = lmax < 1e-300 ? 0.0 : loglog_slope(ts, rl, ts.front(), ts.back());
    return rep;
}

VirialReport virial_check(const Trajectory& traj, const RadialPotential& pot, const Perturbation&,
                          double R) {
    VirialReport rep;
    rep.R = R;
    const int n = traj.size();
    int k0 = -1;
    for (int k = 0; k < n; ++k) {
        const Vec x = traj.position(k);
        if (x.dot(traj.velocity(k)) >= 0.0 && x.norm() > R) {
            k0 = k;
            break;
        }
    }
    if (k0 < 0) return rep;
    rep.T = traj.times[k0];
    // energy of an integrated zero-energy orbit is only zero to rounding
    const double lam = traj.lambda > 1e-12 ? traj.lambda : 0.0;
    const double alpha = pot.alpha();
    double vs = std::numeric_limits<double>::infinity(), gs = vs, lc = vs;
    std::vector<double> ts, rx, rv;
    for (int k = k0; k < n; ++k) {
        const Vec x = traj.position(k), v = traj.velocity(k);
        const double dt = traj.times[k] - rep.T;
        const double scale = std::max(1.0, x.squaredNorm());
        vs = std::min(vs, (x.dot(v) - 2.0 * dt * lam) / std::sqrt(scale));
        gs = std::min(gs, (x.squaredNorm() - 2.0 * lam * dt * dt - R * R) / scale);
        ts.push_back(traj.times[k]);
        rx.push_back(x.norm());
        rv.push_back(v.norm());
    }
    const double t_end = traj.times.back();
    for (size_t i = 0; i < ts.size(); ++i)
        if (ts[i] >= t_end / 100.0) lc = std::min(lc, rx[i] / std::pow(ts[i], alpha));
    // relative tolerance: these are inequalities checked on integrated data
    rep.virial_slack = vs;
    rep.growth_slack = gs;
    rep.virial_pass = vs >= -1e-8;
    rep.growth_pass = gs >= -1e-8;
    rep.lower_constant = lc;
    rep.position_exponent = loglog_slope(ts, rx, t_end / 100.0, t_end);
    rep.velocity_exponent = loglog_slope(ts, rv, t_end / 100.0, t_end);
    rep.expected_position = lam > 0.0 ? 1.0 : alpha;
    rep.expected_velocity = lam > 0.0 ? 0.0 : alpha - 1.0;
    return rep;
}

SpiralResult spiral_example(double mu, double c, double B, double r0, double decades, double tol) {
    if (!(mu > 0.0 && mu < 2.0) || !(c > 0.0) || !(B > 0.0))
        throw DomainError("spiral_example: need mu in (0,2), c > 0, B > 0");
    SpiralResult res;
    res.mu = mu;
    res.c = c;
    res.B = B;
    res.A = B * (c + 1.0 / c) / (2.0 - mu);
    if (res.A <= B) throw DomainError("spiral_example: A <= B, potential not negative");
    const double alpha = 2.0 / (2.0 + mu);
    res.a = std::pow(2.0 * res.A / (alpha * alpha * (1.0 + c * c)), 1.0 / (2.0 + mu));
    const double A = res.A;

    PotentialField v;
    v.value = [=](const Vec& x) {
        const double r = x.norm(), th = std::atan2(x(1), x(0));
        return std::pow(r, -mu) * (-A - B * std::sin(th - c * std::log(r)));
    };
    v.gradient = [=](const Vec& x) -> Vec {
        const double r = x.norm(), th = std::atan2(x(1), x(0));
        const double xi = th - c * std::log(r);
        const double chi = -A - B * std::sin(xi), dchi = -B * std::cos(xi);
        const double rm = std::pow(r, -mu);
        const double dr = -rm / r * (mu * chi + c * dchi);
        const double dth = rm * dchi;
        Vec er(2), et(2);
        er << std::cos(th), std::sin(th);
        et << -std::sin(th), std::cos(th);
        return dr * er + (dth / r) * et;
    };

    const double t0 = std::pow(r0 / res.a, 1.0 / alpha);
    const double t1 = t0 * std::pow(10.0, decades / alpha);
    const double th0 = c * std::log(r0);
    const double rdot = alpha * r0 / t0;
    Vec x0(2), v0(2);
    x0 << r0 * std::cos(th0), r0 * std::sin(th0);
    Vec er = x0 / r0, et(2);
    et << -er(1), er(0);
    v0 = rdot * er + c * rdot * et;  // r θ̇ = c ṙ
    res.trajectory = integrate_newton(v, x0, v0, t0, t1, tol);

    double prev = th0, unwrapped = th0;
    double drift = 0.0;
    const auto& tr = res.trajectory;
    for (int k = 0; k < tr.size(); ++k) {
        const Vec x = tr.position(k);
        const double a = std::atan2(x(1), x(0));
        double da = a - prev;
        da -= 2.0 * std::numbers::pi * std::round(da / (2.0 * std::numbers::pi));
        unwrapped += da;
        prev = a;
        drift = std::max(drift, std::abs(unwrapped - c * std::log(x.norm())));
    }
    res.drift = drift;
    res.sweep = unwrapped - th0;
    return res;
}

}  // namespace lowscat
