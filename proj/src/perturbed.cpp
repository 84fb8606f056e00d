#include "lowscat/perturbed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lowscat/quadrature.hpp"

namespace lowscat {

ScatteringModel make_model(const RadialPotential& v1, const Perturbation& v2, int dim,
                           const PerturbedOptions& opt) {
    if (dim < 2) throw DomainError("make_model: dimension must be >= 2");
    if (!v2.is_zero() && v2.dim() != 0 && v2.dim() != dim)
        throw DomainError("make_model: perturbation dimension mismatch");
    if (!(opt.tol > 0.0) || opt.intervals < 8 || !(opt.t_max > 1.0))
        throw DomainError("make_model: invalid options");
    ScatteringModel m{v1, v2, dim, opt, {}, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.5, {}};
    m.conditions = check_conditions(v1, v2);
    if (!m.conditions.feasible)
        throw AdmissibilityError("make_model: no admissible Hardy constant for this potential");
    m.epsilon_bar = m.conditions.eps_bar;
    m.alpha = v1.alpha();
    if (v2.is_zero()) {
        m.eps = m.alpha - 0.5;
        m.eps2 = m.eps / (opt.eps_factor * m.alpha);
    } else {
        m.eps2 = v2.eps2();
        m.eps = opt.eps_factor * m.alpha * m.eps2;
    }
    m.s = m.alpha + 0.5 - m.eps;
    if (!(std::abs(m.alpha - 0.5 - m.eps) < 0.5 * m.epsilon_bar))
        throw DomainError("make_model: |alpha - 1/2 - eps| >= eps_bar/2; eps2 too far from (2-mu)/4");
    m.sigma0 = std::min(0.5, default_sigma0(v1));
    m.grid = log_time_grid(opt.t_max, opt.intervals);
    return m;
}

FixedPointContext make_context(const ScatteringModel& model, const ScatteringData& data) {
    if (data.x.size() != model.dim || data.omega.size() != model.dim)
        throw DomainError("fixed point: dimension mismatch");
    if (model.opt.check_cone) {
        const Vec om = data.omega.normalized();
        if (!model.cone(om).contains(data.x))
            throw ConeError("fixed point: x outside the cone of radius R0");
    }
    FixedPointContext ctx;
    ctx.model = &model;
    ctx.data = data;
    RadialOptions ro;
    ro.kappa0_sq = model.opt.kappa0_sq;
    ro.sigma = model.opt.check_cone ? model.sigma0 : 2.0;
    auto rad = solve_mixed_radial(model.v1, data, model.grid, ro);
    ctx.orbit = rad.orbit;
    ctx.y1 = std::move(rad.trajectory);
    ctx.qpath.t = model.grid;
    ctx.qpath.epsilon_bar = model.epsilon_bar;
    ctx.qpath.q.resize(model.grid.size());
    for (int k = 0; k < ctx.y1.size(); ++k)
        ctx.qpath.q[k] = -hessian_v1(model.v1, ctx.y1.position(k));
    ctx.solver.emplace(ctx.qpath);
    ctx.s = model.s;
    ctx.eps = model.eps;
    ctx.r_w = 1.0 - model.s;
    ctx.chi_active.assign(model.grid.size(), 0);
    return ctx;
}

namespace {

// -∫₀¹(1-l)∇³V₁(y₁+lz){z,z}dl accumulated into `out` without temporaries.
void taylor_remainder(const RadialPotential& v1, const Vec& y1, const Vec& z, Vec& y, Vec& out) {
    out.setZero();
    const double zz = z.squaredNorm();
    if (zz == 0.0) return;
    const GaussRule& gl = gauss_legendre(8);
    for (size_t i = 0; i < gl.x.size(); ++i) {
        const double l = gl.x[i];
        y = y1 + l * z;
        const double r = y.norm();
        if (r < r_min) throw CoreEntryError("taylor_residual: segment enters |x| < 1");
        const RadialDerivs d = v1.derivs(r);
        const double nz = y.dot(z) / r;
        const double a = (d.d2 - d.d1 / r) / r;
        const double w = gl.w[i] * (1.0 - l);
        // ∇³V₁{z,z} = (V‴ - 3a) nz² n + a (2 nz z + |z|² n),  a = (V″ - V′/r)/r
        out -= (w * ((d.d3 - 3.0 * a) * nz * nz + a * zz) / r) * y;
        out -= (w * 2.0 * a * nz) * z;
    }
}

}  // namespace

Vec taylor_residual(const ScatteringModel& model, const Vec& y1, const Vec& z) {
    Vec y(y1.size()), res(y1.size());
    taylor_remainder(model.v1, y1, z, y, res);
    if (!model.v2.is_zero()) {
        y = y1 + z;
        if (y.norm() < r_min) throw CoreEntryError("taylor_residual: y enters |x| < 1");
        res -= model.v2.gradient(y);
    }
    return res;
}

Vec taylor_residual(const WeightedGridFunction& z, const FixedPointContext& ctx, int node) {
    return taylor_residual(*ctx.model, ctx.y1.position(node), z.values.col(node));
}

namespace {

void apply_weight(WeightedGridFunction& f, double exponent) {
    if (exponent == 0.0) return;
    for (int k = 0; k < f.size(); ++k) f.values.col(k) *= std::pow(f.t[k], exponent);
}

}  // namespace

WeightedGridFunction picard_map(const WeightedGridFunction& z, FixedPointContext& ctx,
                                Mat* wdot) {
    const ScatteringModel& m = *ctx.model;
    const int n = static_cast<int>(ctx.qpath.t.size());
    if (z.size() != n || z.dim() != m.dim) throw DomainError("picard_map: grid mismatch");
    if (z.values.col(0).norm() > 1e-14) throw DomainError("picard_map: z(1) must vanish");
    WeightedGridFunction rhs(ctx.qpath.t, m.dim, ctx.s);
    const double a = m.alpha - ctx.eps;
    ctx.chi1_slack = ctx.chi2_slack = std::numeric_limits<double>::infinity();
    Vec yk(m.dim), zk(m.dim), ybuf(m.dim), res(m.dim);
    for (int k = 0; k < n; ++k) {
        const double t = ctx.qpath.t[k];
        zk = z.values.col(k);
        const double zn = zk.norm();
        const double r1 = zn / ctx.y1.positions.col(k).norm();
        const double r2 = zn / std::pow(t, a);
        ctx.chi1_slack = std::min(ctx.chi1_slack, 2.0 / 3.0 - r1);
        ctx.chi2_slack = std::min(ctx.chi2_slack, 2.0 - r2);
        const double chi = step_below(r1, 2.0 / 3.0) * step_below(r2, 2.0);
        ctx.chi_active[k] = chi < 1.0;
        if (chi > 0.0) {
            yk = ctx.y1.positions.col(k);
            taylor_remainder(m.v1, yk, zk, ybuf, res);
            if (!m.v2.is_zero()) {
                ybuf = yk + zk;
                if (ybuf.norm() < r_min) throw CoreEntryError("taylor_residual: y enters |x| < 1");
                res -= m.v2.gradient(ybuf);
            }
            rhs.values.col(k) = chi * res;
        }
    }
    // weight conjugation t^s T_r(0) t^{2-s}; the exponents cancel
    apply_weight(rhs, (2.0 - ctx.s) - 1.0 - ctx.r_w);
    DecayingSolution sol = ctx.solver->solve(rhs, ctx.s);
    apply_weight(sol.z, ctx.r_w - 1.0 + ctx.s);
    if (wdot) *wdot = std::move(sol.zdot);
    sol.z.s = ctx.s;
    return sol.z;
}

namespace {

double diff_norm(const WeightedGridFunction& a, const WeightedGridFunction& b) {
    WeightedGridFunction d = a;
    d.values -= b.values;
    return d.weighted_norm();
}

void finish_solution(const ScatteringModel& m, const FixedPointContext& ctx, PerturbedSolution& out) {
    const int n = ctx.y1.size();
    out.y.times = ctx.y1.times;
    out.y.lambda = ctx.data.lambda;
    out.y.positions = ctx.y1.positions + out.z.values;
    out.y.velocities = ctx.y1.velocities + out.zdot;
    out.y.energy.resize(n);
    for (int k = 0; k < n; ++k)
        out.y.energy[k] = 0.5 * out.y.velocities.col(k).squaredNorm() + m.potential(out.y.position(k));
    out.field.x = ctx.data.x;
    out.field.omega = ctx.data.omega;
    out.field.lambda = ctx.data.lambda;
    out.field.F = out.y.velocity(0);
    out.field.F1 = ctx.y1.velocity(0);
    FixedPointReport& r = out.report;
    r.energy_error = out.y.energy[0] - ctx.data.lambda;
    r.hardy_margin = hardy_margin(ctx.qpath);
    r.s = ctx.s;
    r.eps = ctx.eps;
    r.z_norm = out.z.weighted_norm();
    r.bound_slack = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k)
        r.bound_slack = std::min(r.bound_slack, 0.5 * std::pow(ctx.y1.times[k], m.alpha - ctx.eps) -
                                                    out.z.values.col(k).norm());
}

}  // namespace

PerturbedSolution solve_mixed_perturbed(const ScatteringModel& m, const ScatteringData& data,
                                        const WeightedGridFunction* warm) {
    FixedPointContext ctx = make_context(m, data);
    const int n = ctx.y1.size();
    PerturbedSolution out;
    out.z = WeightedGridFunction(ctx.qpath.t, m.dim, ctx.s);
    out.zdot = Mat::Zero(m.dim, n);
    FixedPointReport& rep = out.report;
    if (m.v2.is_zero()) {
        rep.chi1_slack = 2.0 / 3.0;
        rep.chi2_slack = 2.0;
        finish_solution(m, ctx, out);
        return out;
    }
    if (warm) {
        if (warm->size() != n || warm->dim() != m.dim)
            throw DomainError("solve_mixed_perturbed: warm start grid mismatch");
        out.z.values = warm->values;
    }
    double prev = -1.0;
    int growing = 0;
    bool converged = false;
    for (int it = 1; it <= m.opt.max_iter; ++it) {
        Mat wd;
        WeightedGridFunction next = picard_map(out.z, ctx, &wd);
        const double change = diff_norm(next, out.z);
        const double scale = std::max(1.0, out.z.weighted_norm());
        if (prev > 1e3 * m.opt.tol * scale) {
            const double ratio = change / prev;
            rep.contraction_ratio = std::max(rep.contraction_ratio, ratio);
            growing = ratio >= 1.0 ? growing + 1 : 0;
            if (growing >= 2)
                throw NonContraction("solve_mixed_perturbed: ratio " + std::to_string(ratio) +
                                     " >= 1");
        }
        out.z = std::move(next);
        out.zdot = std::move(wd);
        prev = change;
        rep.iterations = it;
        rep.final_change = change;
        if (change <= m.opt.tol * scale) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NonContraction("solve_mixed_perturbed: no convergence in " +
                             std::to_string(m.opt.max_iter) + " iterations");
    {
        Mat wd;
        WeightedGridFunction check = picard_map(out.z, ctx, &wd);
        rep.fixed_point_residual = diff_norm(check, out.z);
        out.z = std::move(check);
        out.zdot = std::move(wd);
    }
    rep.chi1_slack = ctx.chi1_slack;
    rep.chi2_slack = ctx.chi2_slack;
    rep.cutoffs_inactive =
        std::none_of(ctx.chi_active.begin(), ctx.chi_active.end(), [](char c) { return c != 0; });
    if (!rep.cutoffs_inactive)
        throw CutoffActive("solve_mixed_perturbed: cutoff active at the fixed point; increase |x|");
    finish_solution(m, ctx, out);
    return out;
}

Vec velocity_field(const ScatteringModel& m, const Vec& x, const Vec& omega, double lambda) {
    if (m.v2.is_zero()) {
        if (x.size() != m.dim || omega.size() != m.dim)
            throw DomainError("velocity_field: dimension mismatch");
        if (m.opt.check_cone && !m.cone(omega).contains(x))
            throw ConeError("velocity_field: x outside the cone of radius R0");
        return radial_field(m.v1, x, omega, lambda, m.opt.kappa0_sq);
    }
    return solve_mixed_perturbed(m, {x, omega, lambda}).field.F;
}

FlowReport flow_consistency(const ScatteringModel& m, const ScatteringData& data, int n_checks) {
    const PerturbedSolution sol = solve_mixed_perturbed(m, data);
    FlowReport rep;
    const auto& t = m.grid;
    for (int j = 0; j < n_checks; ++j) {
        const double target = std::pow(10.0, j);
        auto it = std::lower_bound(t.begin(), t.end(), target);
        if (it == t.end()) break;
        int k = static_cast<int>(it - t.begin());
        if (k > 0 && std::abs(std::log(t[k - 1] / target)) < std::abs(std::log(t[k] / target))) --k;
        const Vec xk = sol.y.position(k);
        const Vec F = velocity_field(m, xk, data.omega, data.lambda);
        const double err = (sol.y.velocity(k) - F).norm() / g(m.v1, data.lambda, xk.norm());
        rep.t_checks.push_back(t[k]);
        rep.errors.push_back(err);
        rep.max_error = std::max(rep.max_error, err);
    }
    return rep;
}

double lipschitz_probe(const ScatteringModel& m, const ScatteringData& data, int pairs,
                       std::uint32_t seed) {
    const PerturbedSolution sol = solve_mixed_perturbed(m, data);
    FixedPointContext ctx = make_context(m, data);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> amp(0.02, 0.2), freq(0.0, 1.0);
    std::normal_distribution<double> normal;
    const double beta = m.alpha - m.eps - 0.05;
    auto random_unit = [&] {
        Vec c(m.dim);
        for (int i = 0; i < m.dim; ++i) c(i) = normal(rng);
        return Vec(c.normalized());
    };
    auto perturbed = [&] {
        WeightedGridFunction z = sol.z;
        const double a = amp(rng), nu = freq(rng);
        const Vec c1 = random_unit(), c2 = random_unit();
        for (int k = 0; k < z.size(); ++k) {
            const double t = z.t[k], l = std::log(t);
            const double shape = a * (1.0 - 1.0 / t) * std::pow(t, beta) / std::sqrt(2.0);
            z.values.col(k) += shape * (std::cos(nu * l) * c1 + std::sin(nu * l) * c2);
        }
        return z;
    };
    double worst = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const WeightedGridFunction z1 = perturbed(), z2 = perturbed();
        const WeightedGridFunction p1 = picard_map(z1, ctx), p2 = picard_map(z2, ctx);
        worst = std::max(worst, diff_norm(p1, p2) / diff_norm(z1, z2));
    }
    return worst;
}

namespace {

Vec rotate_in_plane(const Vec& u, const Vec& v, double angle) {
    return std::cos(angle) * u + std::sin(angle) * v;
}

}  // namespace

R0Selection select_cone(ScatteringModel& m, const std::vector<double>& lambdas,
                        int max_doublings) {
    R0Selection sel;
    const double sigma = m.sigma0;
    const double theta = std::acos(1.0 - sigma);
    std::vector<std::pair<Vec, Vec>> axes;  // (ω, transverse unit)
    for (int a = 0; a < 2; ++a)
        for (int sgn : {+1, -1}) {
            Vec om = Vec::Zero(m.dim), e = Vec::Zero(m.dim);
            om(a) = sgn;
            e(1 - a) = 1.0;
            axes.emplace_back(om, e);
        }
    auto probe_ok = [&](double R, double& ratio, double& lip) {
        ratio = lip = 0.0;
        for (const auto& [om, e] : axes)
            for (double lam : lambdas)
                for (double ang : {0.0, 0.9 * theta, -0.9 * theta}) {
                    ScatteringData d{R * rotate_in_plane(om, e, ang), om, lam};
                    const PerturbedSolution sol = solve_mixed_perturbed(m, d);
                    if (sol.report.bound_slack < 0.0) return false;
                    ratio = std::max(ratio, sol.report.contraction_ratio);
                    if (ang == 0.0 && !m.v2.is_zero()) lip = std::max(lip, lipschitz_probe(m, d));
                }
        return ratio <= 0.5 && lip <= 0.5;
    };
    double R = 1.0;
    bool found = false;
    for (int k = 0; k <= max_doublings; ++k, R *= 2.0) {
        m.R0 = R;
        double ratio = 0.0, lip = 0.0;
        bool ok = false;
        try {
            ok = probe_ok(R, ratio, lip);
        } catch (const Error&) {
            ok = false;
        }
        if (ok) {
            sel.doublings = k;
            sel.contraction_ratio = ratio;
            sel.lipschitz_ratio = lip;
            found = true;
            break;
        }
    }
    if (!found) throw NonContraction("select_cone: no R0 found within the doubling budget");
    sel.R0 = m.R0;

    // cone invariance on the probe orbits
    for (int h = 0; h < 12; ++h) {
        bool invariant = true;
        const double th = std::acos(1.0 - m.sigma0);
        for (const auto& [om, e] : axes) {
            for (double lam : lambdas)
                for (double ang : {0.9 * th, -0.9 * th}) {
                    ScatteringData d{m.R0 * rotate_in_plane(om, e, ang), om, lam};
                    const PerturbedSolution sol = solve_mixed_perturbed(m, d);
                    const Cone cone = m.cone(om);
                    for (int k = 0; k < sol.y.size() && invariant; ++k)
                        invariant = cone.contains(sol.y.position(k));
                }
        }
        if (invariant) break;
        m.sigma0 *= 0.5;
    }
    sel.sigma0 = m.sigma0;
    return sel;
}

namespace {

double angle_of(const Vec& a, const Vec& b) {
    const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
    return std::acos(c);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    const size_t n = lx.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) mx += lx[i], my += ly[i];
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ConeBoundReport field_cone_bounds(const ScatteringModel& m,
                                  const std::vector<ScatteringData>& samples) {
    ConeBoundReport rep;
    rep.eps_check_predicted = std::min(m.eps / m.alpha, m.eps2);
    const double ec = rep.eps_check_predicted;
    std::vector<double> radius;
    std::vector<Vec> Fh, xh, om;
    for (const auto& d : samples) {
        const Vec F = velocity_field(m, d.x, d.omega, d.lambda);
        const Vec F1 = radial_field(m.v1, d.x, d.omega, d.lambda, m.opt.kappa0_sq);
        rep.direction_deviation.push_back((F.normalized() - F1.normalized()).norm());
        radius.push_back(d.x.norm());
        Fh.push_back(F.normalized());
        xh.push_back(d.x.normalized());
        om.push_back(d.omega);
    }
    rep.eps_check_fitted = -fit_slope(radius, rep.direction_deviation);
    rep.c_b = std::numeric_limits<double>::infinity();
    rep.psi_ratio_min = std::numeric_limits<double>::infinity();
    rep.psi_ratio_max = 0.0;
    for (size_t i = 0; i < samples.size(); ++i)
        rep.C_dir = std::max(rep.C_dir, rep.direction_deviation[i] * std::pow(radius[i], ec));
    for (size_t i = 0; i < samples.size(); ++i) {
        const double b = 1.0 - xh[i].dot(om[i]);
        const double decay = std::pow(radius[i], -ec);
        const double fx = Fh[i].dot(xh[i]), fo = Fh[i].dot(om[i]);
        rep.C_a = std::max(rep.C_a, (1.0 - fx) / (b + decay));
        rep.C_c = std::max(rep.C_c, (1.0 - fo) / (b + decay));
        if (b > 1e-12) {
            rep.c_b = std::min(rep.c_b, (1.0 - fx + rep.C_dir * decay) / b);
            const double th = angle_of(xh[i], om[i]), psi = angle_of(Fh[i], xh[i]);
            rep.psi_ratio_min = std::min(rep.psi_ratio_min, psi / th);
            rep.psi_ratio_max = std::max(rep.psi_ratio_max, psi / th);
        }
    }
    rep.pass = std::isfinite(rep.C_a) && std::isfinite(rep.C_c) && std::isfinite(rep.C_dir) &&
               rep.c_b > 0.0;
    return rep;
}

Mat jacobian_fd(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
    const int d = static_cast<int>(x.size());
    Mat J;
    for (int j = 0; j < d; ++j) {
        Vec xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        const Vec col = (f(xp) - f(xm)) / (2.0 * h);
        if (j == 0) J.resize(col.size(), d);
        J.col(j) = col;
    }
    return J;
}

TruncationReport truncated_field_convergence(const ScatteringModel& m, const ScatteringData& data,
                                             const std::vector<double>& n_list) {
    TruncationReport rep;
    const double h = data.x.norm() * 1e-5;
    auto field = [&](const ScatteringModel& mm) {
        return [&mm, &data](const Vec& x) { return velocity_field(mm, x, data.omega, data.lambda); };
    };
    const Vec F = velocity_field(m, data.x, data.omega, data.lambda);
    const Mat J = jacobian_fd(field(m), data.x, h);
    for (double n : n_list) {
        ScatteringModel mn = m;
        if (!m.v2.is_zero()) mn.v2 = m.v2.truncated(n);
        const Vec Fn = velocity_field(mn, data.x, data.omega, data.lambda);
        const Mat Jn = jacobian_fd(field(mn), data.x, h);
        rep.n.push_back(n);
        rep.field_deviation.push_back((Fn - F).norm());
        rep.jacobian_deviation.push_back((Jn - J).norm());
    }
    return rep;
}

namespace {

// Frobenius norm of the second derivative tensor of f at x.
double second_derivative_norm(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
    const int d = static_cast<int>(x.size());
    const Vec f0 = f(x);
    double acc = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            Vec D;
            if (i == j) {
                Vec xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                D = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
                acc += D.squaredNorm();
            } else {
                Vec pp = x, pm = x, mp = x, mm = x;
                pp(i) += h, pp(j) += h;
                pm(i) += h, pm(j) -= h;
                mp(i) -= h, mp(j) += h;
                mm(i) -= h, mm(j) -= h;
                D = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
                acc += 2.0 * D.squaredNorm();
            }
        }
    return std::sqrt(acc);
}

// Tangent basis at ω (columns).
Mat tangent_basis(const Vec& omega) {
    const int d = static_cast<int>(omega.size());
    Mat P = Mat::Identity(d, d) - omega * omega.transpose();
    Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeFullU);
    return svd.matrixU().leftCols(d - 1);
}

int nearest_node(const std::vector<double>& t, double target) {
    auto it = std::lower_bound(t.begin(), t.end(), target);
    if (it == t.end()) return static_cast<int>(t.size()) - 1;
    int k = static_cast<int>(it - t.begin());
    if (k > 0 && std::abs(std::log(t[k - 1] / target)) < std::abs(std::log(t[k] / target))) --k;
    return k;
}

}  // namespace

std::vector<BoundRow> bound_probe(const ScatteringModel& m, const std::string& quantity,
                                  const Vec& xhat_in, const Vec& omega, double lambda,
                                  const std::vector<double>& radii, double t_probe) {
    const Vec xhat = xhat_in.normalized();
    const double mu = m.v1.mu();
    const double ec = std::min(m.eps / m.alpha, m.eps2);
    const double gexp = lambda > 0.0 ? 0.0 : -0.5 * mu;  // d log g / d log r
    const int node = nearest_node(m.grid, t_probe);
    std::vector<BoundRow> rows;

    auto check_stencil = [&](const Vec& x, double h, const Vec& om) {
        const Cone cone = m.cone(om);
        for (int j = 0; j < x.size(); ++j)
            for (double s : {-2.0, 2.0}) {
                Vec xs = x;
                xs(j) += s * h;
                if (m.opt.check_cone && !cone.contains(xs))
                    throw ConeError("bound_probe: stencil leaves the cone");
            }
    };

    if (quantity == "dF" || quantity == "dF_minus_dF1") {
        const bool diff = quantity == "dF_minus_dF1";
        std::vector<double> q1, q2;
        for (double r : radii) {
            const Vec x = r * xhat;
            auto f = [&](const Vec& y) {
                Vec F = velocity_field(m, y, omega, lambda);
                if (diff) F -= radial_field(m.v1, y, omega, lambda, m.opt.kappa0_sq);
                return F;
            };
            check_stencil(x, r * 1e-3, omega);
            q1.push_back(jacobian_fd(f, x, r * 1e-5).norm());
            q2.push_back(second_derivative_norm(f, x, r * 1e-3));
        }
        const double extra = diff ? -ec : 0.0;
        rows.push_back({quantity, 1, fit_slope(radii, q1), -1.0 + gexp + extra});
        rows.push_back({quantity, 2, fit_slope(radii, q2), -2.0 + gexp + extra});
    } else if (quantity == "dy" || quantity == "dydot") {
        const bool vel = quantity == "dydot";
        std::vector<double> qx1, qx2, qw;
        for (double r : radii) {
            const Vec x = r * xhat;
            auto at_node = [&](const Vec& y, const Vec& om) {
                const PerturbedSolution sol = solve_mixed_perturbed(m, {y, om, lambda});
                Vec v = vel ? sol.y.velocity(node) : sol.y.position(node);
                if (vel) v -= std::sqrt(2.0 * lambda) * om;
                return v;
            };
            auto fx = [&](const Vec& y) { return at_node(y, omega); };
            check_stencil(x, r * 1e-3, omega);
            qx1.push_back(jacobian_fd(fx, x, r * 1e-5).norm());
            qx2.push_back(second_derivative_norm(fx, x, r * 1e-3));
            const Mat T = tangent_basis(omega);
            double acc = 0.0;
            for (int j = 0; j < T.cols(); ++j) {
                const double h = 1e-5;
                const Vec op = (omega + h * T.col(j)).normalized();
                const Vec om = (omega - h * T.col(j)).normalized();
                acc += ((at_node(x, op) - at_node(x, om)) / (2.0 * h)).squaredNorm();
            }
            qw.push_back(std::sqrt(acc));
        }
        if (vel) {
            // |x|^{-k}|y|^{-μ}g(|y|)^{-1} with |y| ~ |x| at fixed t
            const double base = -mu - gexp;
            rows.push_back({quantity + "_dx", 1, fit_slope(radii, qx1), -1.0 + base});
            rows.push_back({quantity + "_dx", 2, fit_slope(radii, qx2), -2.0 + base});
            rows.push_back({quantity + "_domega", 1, fit_slope(radii, qw), base});
        } else {
            rows.push_back({quantity + "_dx", 1, fit_slope(radii, qx1), 0.0});
            rows.push_back({quantity + "_dx", 2, fit_slope(radii, qx2), -1.0});
            rows.push_back({quantity + "_domega", 1, fit_slope(radii, qw), 1.0});
        }
    } else if (quantity == "y_inverse_bounds") {
        std::vector<double> qa, qb;
        for (double r : radii) {
            const PerturbedSolution sol = solve_mixed_perturbed(m, {r * xhat, omega, lambda});
            double a = 0.0, b = 0.0;
            for (int k = 1; k < sol.y.size(); ++k) {
                const double t = sol.y.times[k], yn = sol.y.position(k).norm();
                a = std::max(a, std::pow(t, m.alpha) / yn);
                b = std::max(b, (t - 1.0) * g(m.v1, lambda, yn) / yn);
            }
            qa.push_back(a);
            qb.push_back(b);
        }
        rows.push_back({"t_alpha_over_y", 0, fit_slope(radii, qa), 0.0});
        rows.push_back({"t_g_over_y", 0, fit_slope(radii, qb), 0.0});
    } else {
        throw DomainError("bound_probe: unknown quantity " + quantity);
    }
    return rows;
}

}  // namespace lowscat
