#include "lowscat/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lowscat/quadrature.hpp"

namespace lowscat {

Vec FieldEvaluator::operator()(const Vec& x, const Vec& omega, double lambda) {
    ++solves_;
    if (model_.v2.is_zero()) return velocity_field(model_, x, omega, lambda);
    const WeightedGridFunction* warm = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [xc, zc] : cache_) {
        const double d = (xc - x).norm();
        if (d < best) {
            best = d;
            warm = &zc;
        }
    }
    // a warm start from far away is worse than z = 0
    if (warm && best > 0.25 * x.norm()) warm = nullptr;
    PerturbedSolution sol = solve_mixed_perturbed(model_, {x, omega, lambda}, warm);
    constexpr size_t capacity = 32;
    if (cache_.size() < capacity) {
        cache_.emplace_back(x, std::move(sol.z));
    } else {
        cache_[next_] = {x, std::move(sol.z)};
        next_ = (next_ + 1) % capacity;
    }
    return sol.field.F;
}

namespace {

void check_direction(const ScatteringModel& m, const Vec& x, const Vec& omega) {
    if (x.size() != m.dim || omega.size() != m.dim)
        throw DomainError("phase: dimension mismatch");
    if (std::abs(omega.norm() - 1.0) > 1e-8) throw DomainError("phase: omega not unit");
}

// The segment from R₀ω to x stays in the cone when x is in it and x·ω >= R₀.
bool segment_in_cone(const ScatteringModel& m, const Vec& x, const Vec& omega) {
    const Cone cone = m.cone(omega);
    if (!cone.contains(x)) return false;
    if (x.dot(omega) >= m.R0 * (1.0 - 1e-12)) return true;
    const Vec base = m.R0 * omega;
    for (int k = 1; k <= 64; ++k)
        if (!cone.contains(base + (k / 64.0) * (x - base))) return false;
    return true;
}

}  // namespace

namespace {

// With `frozen` set, the l-panels are reused instead of adapted, so the result
// is a smooth function of x (needed for finite differences of φ).
double segment_phase(FieldEvaluator& field, const ScatteringModel& m, const Vec& x,
                     const Vec& omega, double lambda, const PhaseOptions& opt,
                     std::vector<double>* breaks, const std::vector<double>* frozen) {
    check_direction(m, x, omega);
    if (lambda < 0.0) throw DomainError("phase: negative energy");
    if (!segment_in_cone(m, x, omega)) throw ConeError("phase: segment leaves the cone");
    const Vec base = m.R0 * omega;
    const Vec d = x - base;
    const double shift = std::sqrt(2.0 * lambda) * m.R0;
    if (breaks) *breaks = {0.0, 1.0};
    if (d.norm() == 0.0) return shift;
    auto f = [&](double l) { return d.dot(field(base + l * d, omega, lambda)); };
    if (frozen) return integrate_panels(f, *frozen) + shift;
    return integrate(f, 0.0, 1.0, opt.rel_tol, 0.0, 4000, breaks).value + shift;
}

}  // namespace

double phase(FieldEvaluator& field, const ScatteringModel& m, const Vec& x, const Vec& omega,
             double lambda, const PhaseOptions& opt) {
    return segment_phase(field, m, x, omega, lambda, opt, nullptr, nullptr);
}

double phase(const ScatteringModel& m, const Vec& x, const Vec& omega, double lambda,
             const PhaseOptions& opt) {
    FieldEvaluator field(m);
    return phase(field, m, x, omega, lambda, opt);
}

namespace {

struct ArcFrame {
    Vec xhat, e;
    double theta = 0.0;  // angle from ω to x̂
};

ArcFrame arc_frame(const Vec& x, const Vec& omega) {
    ArcFrame a;
    a.xhat = x.normalized();
    a.e = a.xhat - a.xhat.dot(omega) * omega;
    const double s = a.e.norm();
    a.theta = std::atan2(s, a.xhat.dot(omega));
    if (s > 1e-14) a.e /= s;
    else a.theta = 0.0;
    return a;
}

}  // namespace

double phase_arc_ray(FieldEvaluator& field, const ScatteringModel& m, const Vec& x,
                     const Vec& omega, double lambda, const PhaseOptions& opt) {
    check_direction(m, x, omega);
    if (lambda < 0.0) throw DomainError("phase: negative energy");
    const Cone cone = m.cone(omega);
    if (!cone.contains(x)) throw ConeError("phase_arc_ray: x outside the cone");
    const ArcFrame a = arc_frame(x, omega);
    const double R0 = m.R0, r = x.norm();
    double arc = 0.0;
    if (a.theta > 0.0) {
        auto f = [&](double b) {
            const Vec p = R0 * (std::cos(b) * omega + std::sin(b) * a.e);
            const Vec dp = R0 * (-std::sin(b) * omega + std::cos(b) * a.e);
            return dp.dot(field(p, omega, lambda));
        };
        arc = integrate(f, 0.0, a.theta, opt.rel_tol).value;
    }
    double ray = 0.0;
    if (r > R0) {
        auto f = [&](double rho) { return a.xhat.dot(field(rho * a.xhat, omega, lambda)); };
        ray = integrate(f, R0, r, opt.rel_tol).value;
    }
    return std::sqrt(2.0 * lambda) * R0 + arc + ray;
}

double phase_radial(const ScatteringModel& m, const Vec& x, const Vec& omega, double lambda,
                    const PhaseOptions& opt) {
    if (!m.v2.is_zero()) throw DomainError("phase_radial: requires V2 = 0");
    check_direction(m, x, omega);
    if (lambda < 0.0) throw DomainError("phase: negative energy");
    if (!m.cone(omega).contains(x)) throw ConeError("phase_radial: x outside the cone");
    const ArcFrame a = arc_frame(x, omega);
    const double R0 = m.R0, r = x.norm(), th1 = -a.theta;
    const double k0 = m.opt.kappa0_sq;
    // φ̃ = ∫_{R₀}^r g(ρ)√(1-κ²)dρ, κ = L/(ρ g(ρ))
    double tilde = 0.0;
    if (r > R0) {
        auto f = [&](double rho) {
            const double gr = g(m.v1, lambda, rho);
            if (th1 == 0.0) return gr;
            const double k = L_of_theta1(m.v1, lambda, rho, th1, k0) / (rho * gr);
            return gr * std::sqrt((1.0 - k) * (1.0 + k));
        };
        tilde = integrate(f, R0, r, opt.rel_tol).value;
    }
    // φ₂: arc at radius R₀, where F·dp = -L dβ
    double arc = 0.0;
    if (a.theta > 0.0) {
        auto f = [&](double b) { return -L_of_theta1(m.v1, lambda, R0, -b, k0); };
        arc = integrate(f, 0.0, a.theta, opt.rel_tol).value;
    }
    return tilde + std::sqrt(2.0 * lambda) * R0 + arc;
}

double incoming_phase(const ScatteringModel& m, const Vec& x, const Vec& omega, double lambda,
                      const PhaseOptions& opt) {
    return -phase(m, x, Vec(-omega), lambda, opt);
}

PhaseSample eikonal_residual(const ScatteringModel& m, const Vec& x, const Vec& omega,
                             double lambda, const PhaseOptions& opt) {
    check_direction(m, x, omega);
    FieldEvaluator field(m);
    PhaseSample ps;
    ps.x = x;
    ps.omega = omega;
    ps.lambda = lambda;
    ps.F = field(x, omega, lambda);
    std::vector<double> panels;
    ps.phi = segment_phase(field, m, x, omega, lambda, opt, &panels, nullptr);
    const int d = static_cast<int>(x.size());
    ps.grad_phi.resize(d);
    Vec grad3(d);
    const double h0 = x.norm() * 1e-4;
    ps.step = h0;
    auto phi_at = [&](const Vec& p) {
        return segment_phase(field, m, p, omega, lambda, opt, nullptr, &panels);
    };
    for (int i = 0; i < d; ++i) {
        Vec e = Vec::Zero(d);
        e(i) = 1.0;
        auto ok = [&](double h, std::initializer_list<int> ks) {
            for (int k : ks)
                if (!segment_in_cone(m, Vec(x + k * h * e), omega)) return false;
            return true;
        };
        double h = h0;
        bool central = false;
        for (int tries = 0; tries < 4 && !central; ++tries) {
            if (ok(h, {-2, -1, 1, 2})) central = true;
            else h *= 0.5;
        }
        if (central) {
            const double fm2 = phi_at(x - 2 * h * e), fm1 = phi_at(x - h * e);
            const double fp1 = phi_at(x + h * e), fp2 = phi_at(x + 2 * h * e);
            ps.grad_phi(i) = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
            grad3(i) = (fp1 - fm1) / (2.0 * h);
        } else {
            h = h0;
            double sgn = 0.0;
            if (ok(h, {1, 2, 3, 4})) sgn = 1.0;
            else if (ok(h, {-1, -2, -3, -4})) sgn = -1.0;
            else throw ConeError("eikonal_residual: stencil leaves the cone");
            const double hs = sgn * h;
            double f[5];
            f[0] = ps.phi;
            for (int k = 1; k <= 4; ++k) f[k] = phi_at(x + k * hs * e);
            ps.grad_phi(i) = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) /
                             (12.0 * hs);
            grad3(i) = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * hs);
            ps.one_sided = true;
        }
        ps.step = std::min(ps.step, h);
    }
    const double V = m.potential(x);
    ps.residual = 0.5 * ps.grad_phi.squaredNorm() + V - lambda;
    ps.gradient_error = (ps.grad_phi - ps.F).norm();
    ps.energy_identity = 0.5 * ps.F.squaredNorm() + V - lambda;
    ps.fd_estimate = (ps.grad_phi - grad3).norm();
    return ps;
}

double curl_check(const ScatteringModel& m, const Vec& x, const Vec& omega, double lambda) {
    check_direction(m, x, omega);
    FieldEvaluator field(m);
    const double h = x.norm() * 1e-4;
    const Cone cone = m.cone(omega);
    for (int j = 0; j < x.size(); ++j)
        for (double s : {-1.0, 1.0}) {
            Vec p = x;
            p(j) += s * h;
            if (!cone.contains(p)) throw ConeError("curl_check: stencil leaves the cone");
        }
    const Mat J = jacobian_fd([&](const Vec& p) { return field(p, omega, lambda); }, x, h);
    double worst = 0.0;
    for (int i = 0; i < J.rows(); ++i)
        for (int j = i + 1; j < J.cols(); ++j) worst = std::max(worst, std::abs(J(j, i) - J(i, j)));
    return worst;
}

// ---------------------------------------------------------------------------

namespace {

struct OneSided {
    Vec omega_plus;
    double lambda = 0.0;
    double T0 = 0.0;
    double position_match = 0.0;
    double velocity_match = 0.0;
    int doublings = 0;
    double t_entry = 0.0;
    AsymptoticReport asymptotics;
    ClassificationDiagnostics diagnostics;
};

int nearest_index(const std::vector<double>& t, double target) {
    auto it = std::lower_bound(t.begin(), t.end(), target);
    if (it == t.end()) return static_cast<int>(t.size()) - 1;
    int k = static_cast<int>(it - t.begin());
    if (k > 0 && target - t[k - 1] < t[k] - target) --k;
    return k;
}

ClassificationDiagnostics window_diagnostics(const ScatteringModel& m, const Trajectory& tr,
                                             double T, const ScatteringData& data) {
    ClassificationDiagnostics dg;
    const double eb = m.epsilon_bar;
    dg.qtilde_ceiling = 0.5 * (1.0 + eb);
    dg.condition_margin = m.conditions.margin_velocity;
    dg.hardy_margin = std::numeric_limits<double>::infinity();
    RadialOptions ro;
    ro.kappa0_sq = m.opt.kappa0_sq;
    ro.sigma = 2.0;
    const MixedRadialSolution rad = solve_mixed_radial(m.v1, data, m.grid, ro);
    const GaussRule& gl = gauss_legendre(8);
    for (int k = 0; k < tr.size(); ++k) {
        const double t = tr.times[k];
        if (t < T || t > 10.0 * T) continue;
        const double s = t - T + 1.0;
        const Vec y1 = rad.trajectory.sample_position(s);
        const Vec zt = tr.position(k) - y1;
        for (double l : {0.0, 0.5, 1.0}) {
            const double tt = t_tilde(m.v1, (y1 + l * zt).norm());
            if (tt > 0.0) dg.time_ratio_max = std::max(dg.time_ratio_max, (s - 1.0) / tt);
        }
        double qt = 0.0;
        Mat q = Mat::Zero(m.dim, m.dim);
        for (size_t i = 0; i < gl.x.size(); ++i) {
            const Vec p = y1 + gl.x[i] * zt;
            const RadialDerivs dv = m.v1.derivs(p.norm());
            qt += gl.w[i] * (-dv.d1 / std::sqrt(-2.0 * dv.v));
            q -= gl.w[i] * hessian_v1(m.v1, p);
        }
        dg.qtilde_max = std::max(dg.qtilde_max, (s - 1.0) * qt);
        const double lmin =
            Eigen::SelfAdjointEigenSolver<Mat>(q, Eigen::EigenvaluesOnly).eigenvalues()(0);
        dg.hardy_margin = std::min(dg.hardy_margin, (s - 1.0) * (s - 1.0) * lmin);
    }
    dg.hardy_margin += 0.25 * (1.0 - eb * eb);
    return dg;
}

struct DirectionFit {
    Vec omega;
    double position_match = 0.0;
};

// Window samples at ~12 log-spaced times in [T, 10T].
std::vector<int> window_nodes(const Trajectory& tr, int kT) {
    std::vector<int> idx;
    const double T = tr.times[kT];
    for (int c = 0; c <= 12; ++c) {
        const int j = nearest_index(tr.times, T * std::pow(10.0, c / 12.0));
        if (idx.empty() || j != idx.back()) idx.push_back(j);
    }
    return idx;
}

// Stacked (x(t) - y(t - T + 1))/|x(t)| over the window for the mixed solution from (x(T), ω, λ).
Vec window_residual(const ScatteringModel& m, const Trajectory& tr, int kT,
                    const std::vector<int>& nodes, const Vec& omega, double lam) {
    const PerturbedSolution sol = solve_mixed_perturbed(m, {tr.position(kT), omega, lam});
    const int d = tr.dim();
    Vec r(d * static_cast<int>(nodes.size()));
    for (size_t i = 0; i < nodes.size(); ++i) {
        const int j = nodes[i];
        const Vec y = sol.y.sample_position(tr.times[j] - tr.times[kT] + 1.0);
        r.segment(d * i, d) = (tr.position(j) - y) / tr.position(j).norm();
    }
    return r;
}

double sup_match(const Vec& r, int d) {
    double worst = 0.0;
    for (int i = 0; i < r.size() / d; ++i) worst = std::max(worst, r.segment(d * i, d).norm());
    return worst;
}

// Gauss–Newton on the tangent coordinates of ω. The tail estimate of ω⁺ can be
// far too coarse at λ = 0, where ω(t) converges slowly.
DirectionFit refine_direction(const ScatteringModel& m, const Trajectory& tr, int kT,
                              const Vec& omega0, double lam) {
    const int d = tr.dim();
    const std::vector<int> nodes = window_nodes(tr, kT);
    Mat basis = Eigen::HouseholderQR<Mat>(omega0).householderQ();
    const Mat tangent = basis.rightCols(d - 1);
    Vec om = omega0;
    Vec r = window_residual(m, tr, kT, nodes, om, lam);
    double best = sup_match(r, d);
    for (int it = 0; it < 8 && best > 1e-13; ++it) {
        constexpr double h = 1e-6;
        Mat J(r.size(), d - 1);
        for (int i = 0; i < d - 1; ++i) {
            const Vec omh = (om + h * tangent.col(i)).normalized();
            J.col(i) = (window_residual(m, tr, kT, nodes, omh, lam) - r) / h;
        }
        const Vec step = J.colPivHouseholderQr().solve(-r);
        Vec trial = (om + tangent * step).normalized();
        Vec rt = window_residual(m, tr, kT, nodes, trial, lam);
        double bt = sup_match(rt, d);
        if (!(bt < best)) break;
        const double gain = best / bt;
        om = trial;
        r = std::move(rt);
        best = bt;
        if (gain < 2.0) break;
    }
    return {om, best};
}

OneSided classify_forward(const ScatteringModel& m, const Trajectory& tr,
                          const ClassifyOptions& opt) {
    const int n = tr.size();
    if (n < 10) throw NoMatch("classify_orbit: trajectory too short");
    if (tr.dim() != m.dim) throw DomainError("classify_orbit: dimension mismatch");
    const Vec xe = tr.position(n - 1), ve = tr.velocity(n - 1);
    if (xe.dot(ve) <= 0.0 || xe.norm() < 100.0 * std::max(1.0, tr.position(0).norm()))
        throw NoMatch("classify_orbit: orbit does not escape within the trajectory");
    OneSided res;
    try {
        res.asymptotics = omega_plus(tr);
    } catch (const DomainError& e) {
        throw NoMatch(std::string("classify_orbit: ") + e.what());
    }
    const Vec om = res.asymptotics.omega_plus.normalized();
    res.omega_plus = om;
    double lam = 0.5 * ve.squaredNorm() + m.potential(xe);
    const double drift = tr.energy.empty() ? 0.0 : tr.max_energy_drift();
    if (lam < 0.0) {
        if (lam < -10.0 * drift - 1e-14) throw NoMatch("classify_orbit: negative energy (bound orbit)");
        lam = 0.0;
    }
    res.lambda = lam;
    const Cone cone = m.cone(om);
    int entry = -1;
    for (int k = 0; k < n; ++k)
        if (cone.contains(tr.position(k)) && tr.position(k).dot(tr.velocity(k)) > 0.0) {
            entry = k;
            break;
        }
    if (entry < 0) throw NoMatch("classify_orbit: orbit never enters the outgoing cone");
    res.t_entry = tr.times[entry];
    double T = std::max(res.t_entry, 1.0);
    const double t_last = tr.times.back();
    FieldEvaluator field(m);
    for (int k = 0; k <= opt.max_doublings; ++k, T *= 2.0) {
        if (10.0 * T > t_last) break;
        res.doublings = k;
        const int kT = nearest_index(tr.times, T);
        const double Tk = tr.times[kT];  // use a sample time to avoid interpolating x(T)
        double pos = 0.0, vel = 0.0;
        Vec omk;
        try {
            const DirectionFit fit = refine_direction(m, tr, kT, om, lam);
            omk = fit.omega;
            pos = fit.position_match;
            if (pos > opt.position_tol) continue;
            for (int c = 0; c < opt.velocity_checks; ++c) {
                const double tc = Tk * std::pow(10.0, c / std::max(1.0, opt.velocity_checks - 1.0));
                const int j = nearest_index(tr.times, tc);
                const Vec xj = tr.position(j);
                const Vec F = field(xj, omk, lam);
                vel = std::max(vel, (tr.velocity(j) - F).norm() / g(m.v1, lam, xj.norm()));
            }
            if (vel > opt.velocity_tol) continue;
        } catch (const Error&) {
            continue;
        }
        res.omega_plus = omk;
        res.T0 = Tk;
        res.position_match = pos;
        res.velocity_match = vel;
        res.diagnostics = window_diagnostics(m, tr, Tk, {tr.position(kT), omk, lam});
        return res;
    }
    throw NoMatch("classify_orbit: no matching T found (entry t = " + std::to_string(res.t_entry) +
                  ", last t = " + std::to_string(t_last) + ", omega+ residual " +
                  std::to_string(res.asymptotics.omega_residual) + ")");
}

Trajectory slice(const Trajectory& tr, bool forward) {
    std::vector<int> idx;
    for (int k = 0; k < tr.size(); ++k)
        if (forward ? tr.times[k] >= 0.0 : tr.times[k] <= 0.0) idx.push_back(k);
    if (!forward) std::reverse(idx.begin(), idx.end());
    Trajectory out;
    out.lambda = tr.lambda;
    out.positions.resize(tr.dim(), idx.size());
    out.velocities.resize(tr.dim(), idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        const int k = idx[i];
        out.times.push_back(forward ? tr.times[k] : -tr.times[k]);
        out.positions.col(i) = tr.positions.col(k);
        out.velocities.col(i) = forward ? Vec(tr.velocities.col(k)) : Vec(-tr.velocities.col(k));
        if (!tr.energy.empty()) out.energy.push_back(tr.energy[k]);
    }
    return out;
}

}  // namespace

ClassificationResult classify_orbit(const ScatteringModel& m, const Trajectory& traj,
                                    const ClassifyOptions& opt) {
    if (traj.size() < 10) throw NoMatch("classify_orbit: trajectory too short");
    const bool two_sided = traj.times.front() < 0.0;
    const OneSided fwd = classify_forward(m, two_sided ? slice(traj, true) : traj, opt);
    ClassificationResult res;
    res.omega_plus = fwd.omega_plus;
    res.lambda = fwd.lambda;
    res.T0 = fwd.T0;
    res.position_match = fwd.position_match;
    res.velocity_match = fwd.velocity_match;
    res.doublings = fwd.doublings;
    res.t_entry = fwd.t_entry;
    res.asymptotics = fwd.asymptotics;
    res.diagnostics = fwd.diagnostics;
    if (two_sided) {
        const OneSided bwd = classify_forward(m, slice(traj, false), opt);
        res.omega_minus = Vec(-bwd.omega_plus);
        res.T0_minus = bwd.T0;
    }
    return res;
}

}  // namespace lowscat
