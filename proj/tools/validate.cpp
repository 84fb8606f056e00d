#include <cmath>
#include <numbers>

#include "commands.hpp"

namespace lowscat::cli {

namespace {

constexpr double pi = std::numbers::pi;

class Checks {
public:
    // le: passes when value <= limit; ge: when value >= limit.
    void le(const std::string& name, double value, double limit) { add(name, value, limit, "<=", value <= limit); }
    void ge(const std::string& name, double value, double limit) { add(name, value, limit, ">=", value >= limit); }
    void flag(const std::string& name, bool ok) {
        list_.push_back(Json{{"name", name}, {"pass", ok}});
        pass_ = pass_ && ok;
    }
    void note(const std::string& key, Json value) { notes_[key] = std::move(value); }
    bool pass() const { return pass_; }
    Json report(const std::string& suite) const {
        Json j{{"suite", suite}, {"pass", pass_}, {"checks", list_}};
        if (!notes_.empty()) j["details"] = notes_;
        return j;
    }

private:
    void add(const std::string& name, double value, double limit, const char* rel, bool ok) {
        ok = ok && std::isfinite(value);
        list_.push_back(Json{{"name", name}, {"value", value}, {"relation", rel}, {"limit", limit},
                             {"margin", std::string(rel) == "<=" ? limit - value : value - limit},
                             {"pass", ok}});
        pass_ = pass_ && ok;
    }
    Json list_ = Json::array();
    Json notes_ = Json::object();
    bool pass_ = true;
};

void suite_conditions(const Json& raw, Checks& c) {
    if (!raw.contains("potential")) throw ConfigError("missing key 'potential'");
    const Json& p = raw.at("potential");
    // μ outside (0,2) cannot be built; report the range margin instead of rejecting the config
    if (p.is_object() && p.contains("mu") && p.at("mu").is_number()) {
        const double mu = p.at("mu").get<double>();
        if (!(mu > 0.0 && mu < 2.0)) {
            c.ge("margin_mu_range", std::min(mu, 2.0 - mu), 0.0);
            return;
        }
    }
    const RunConfig cfg = parse_config(raw);
    const ConditionReport r = check_conditions(cfg.v1, cfg.v2);
    c.ge("margin_mu_range", r.margin_mu_range, 0.0);
    c.ge("margin_bound", r.margin_bound, 0.0);
    c.ge("margin_derivatives", r.margin_derivatives, 0.0);
    c.ge("margin_virial", r.margin_virial, 0.0);
    if (!cfg.v2.is_zero()) {
        c.ge("margin_perturbation", r.margin_perturbation, 0.0);
        c.ge("margin_eps2", r.margin_eps2, -1e-12);
    }
    c.flag("hardy_constant_feasible", r.feasible);
    if (r.feasible) {
        c.ge("margin_hardy", r.margin_hardy, 0.0);
        c.ge("margin_second", r.margin_second, 0.0);
        c.ge("margin_velocity", r.margin_velocity, 0.0);
    }
    c.note("conditions", to_json(r));
}

// Angle of p from e₁, unwrapped backwards from the last sample (where it is ~0).
// Polar angle along the orbit, unwrapped forward from θ₁ (the far end may still be
// turns away from the asymptote when μ is close to 2).
std::vector<double> angles_from_axis(const Trajectory& tr, double theta1) {
    std::vector<double> th(tr.size());
    double prev = theta1;
    for (int k = 0; k < tr.size(); ++k) {
        double a = std::atan2(tr.positions(1, k), tr.positions(0, k));
        while (a - prev > pi) a -= 2.0 * pi;
        while (a - prev < -pi) a += 2.0 * pi;
        th[k] = prev = a;
    }
    return th;
}

void suite_radial(const Json& raw, Checks& c) {
    const RunConfig cfg = parse_config(raw);
    const RadialPotential& v = cfg.v1;
    const std::vector<double> grid = log_time_grid(1e6, 4000);
    // θ₁ ↔ L round trip, any potential
    double trip = 0.0;
    for (double lam : {0.0, 0.5})
        for (double th : {-0.3, -1.0, -1.4}) {
            const double L = L_of_theta1(v, lam, 2.0, th);
            trip = std::max(trip, std::abs(theta1_of_L(v, lam, 2.0, L) - th));
        }
    c.le("theta1_L_round_trip", trip, 1e-10);
    if (v.name() == "coulomb") {
        const double gam = -v.value(1.0);
        double worst = 0.0;
        for (double lam : {0.0, 0.5})
            for (double L : {2.0, 3.0, 4.0}) {
                const double rtp = turning_point(v, lam, L);
                const double ttp = std::abs(theta_tp(v, lam, L));
                const double r1 = std::max(1.0, 1.01 * rtp);
                const double k = L / (r1 * g(v, lam, r1));
                const PlanarOrbit o = make_planar_orbit(v, lam, r1, theta1_of_kappa(v, lam, r1, k), 0.9999);
                const Trajectory tr = planar_orbit_trajectory(v, o, grid);
                const std::vector<double> th = angles_from_axis(tr, o.theta1);
                for (int i = 0; i < tr.size(); ++i) {
                    const double r = tr.position(i).norm();
                    if (r > 100.0) break;
                    const double lhs = L * L / (gam * r);
                    const double rhs = 1.0 - std::cos(ttp - std::abs(th[i])) / std::cos(ttp);
                    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
                }
            }
        c.le("coulomb_orbit_closed_form", worst, 1e-6);
        const double r1 = 2.0, lam = 0.5;
        const double al = pi - std::atan(std::sqrt(2.0 * lam * (2.0 * lam * r1 * r1 / (gam * gam) + 2.0 * r1 / gam)));
        c.le("coulomb_allowed_angle", std::abs(allowed_angle(v, lam, r1) - al), 1e-6);
    }
    if (v.name() == "power_law") {
        const double mu = v.mu();
        const double exact = pi / (2.0 - mu);
        double lo = 1e300, hi = -1e300, dev = 0.0;
        for (int i = 0; i < 10; ++i) {
            const double th = std::abs(theta_tp(v, 0.0, 1.5 + 0.7 * i));
            lo = std::min(lo, th);
            hi = std::max(hi, th);
            dev = std::max(dev, std::abs(th - exact));
        }
        c.le("zero_energy_theta_tp", dev, 1e-8);
        c.le("zero_energy_theta_tp_spread", hi - lo, 1e-10);
        const double ks = kappa_sensitivity(v, 0.0, 3.0);
        c.le("kappa_sensitivity", std::abs(ks - (1.0 - 0.5 * mu) * (1.0 - 0.5 * mu)), 1e-8);
        // implicit orbit equation from the turning point, r scaled by r_tp
        const double L = 2.0;
        const double rtp = turning_point(v, 0.0, L);
        const double r1 = std::max(1.0, 1.001 * rtp);
        const double k = L / (r1 * g(v, 0.0, r1));
        const PlanarOrbit o = make_planar_orbit(v, 0.0, r1, theta1_of_kappa(v, 0.0, r1, k), 1.0);
        const Trajectory tr = planar_orbit_trajectory(v, o, grid);
        const std::vector<double> th = angles_from_axis(tr, o.theta1);
        double worst = 0.0;
        for (int i = 0; i < tr.size(); ++i) {
            const double r = tr.position(i).norm() / rtp;
            if (r > 1e3) break;
            const double lhs = 2.0 / (1.0 + std::cos((2.0 - mu) * (exact - std::abs(th[i]))));
            worst = std::max(worst, std::abs(lhs - std::pow(r, 2.0 - mu)) / std::pow(r, 2.0 - mu));
        }
        c.le("zero_energy_orbit_equation", worst, 1e-6);
    }
}

void suite_linforce(const Json& raw, Checks& c) {
    const RunConfig cfg = parse_config(raw);
    const std::vector<double> grid = log_time_grid(1e6, 4000);
    const auto zero = [](double) { return Mat(Mat::Zero(1, 1)); };
    const CoefficientPath q0 = CoefficientPath::sample(zero, grid, 1.0);
    WeightedGridFunction f(grid, 1, 1.0);
    for (int k = 0; k < f.size(); ++k) f.values(0, k) = std::pow(grid[k], -3.0);
    const DecayingSolution sol = solve_decaying(q0, f, 1.0);
    double err = 0.0;
    for (int k = 0; k < f.size() && grid[k] <= 1e3; ++k)
        err = std::max(err, std::abs(sol.z.values(0, k) - 0.5 * (1.0 / grid[k] - 1.0)));
    c.le("analytic_max_error", err, 1e-7);
    const RefinementReport rr = refinement_study(
        zero, [](double t) { Vec v(1); v << std::pow(t, -3.0); return v; }, 1, 1e6, 1000, 1.0, 1.0);
    c.ge("refinement_order", rr.order, 2.0);
    WeightedGridFunction f0(grid, 1, 1.0);
    c.le("zero_forcing", solve_decaying(q0, f0, 1.0).z.max_norm(), 1e-12);
    // Hardy quantity along the zero-energy radial orbit of the configured V₁
    const PlanarOrbit o = make_planar_orbit(cfg.v1, 0.0, 1.0, 0.0);
    const Trajectory tr = planar_orbit_trajectory(cfg.v1, o, grid);
    CoefficientPath qp;
    qp.t = grid;
    qp.epsilon_bar = 0.0;
    for (int k = 0; k < tr.size(); ++k) qp.q.push_back(-hessian_v1(cfg.v1, tr.position(k)));
    const double inf_q = hardy_margin(qp) - 0.25;
    c.note("hardy_inf", inf_q);
    c.ge("hardy_inf_above_minus_quarter", inf_q, -0.25);
}

ScatteringData default_data(const RunConfig& cfg, const ScatteringModel& m) {
    Vec om = Vec::Zero(cfg.dim);
    om(0) = 1.0;
    if (cfg.omega) om = *cfg.omega;
    Vec e = Vec::Zero(cfg.dim);
    e(std::abs(om(0)) < 0.9 ? 0 : 1) = 1.0;
    e = (e - e.dot(om) * om).normalized();
    const double th = 0.5 * std::acos(1.0 - m.sigma0);
    const Vec x = cfg.x ? *cfg.x : Vec(1.5 * m.R0 * (std::cos(th) * om + std::sin(th) * e));
    return {x, om, cfg.lambda.value_or(0.0)};
}

void suite_fixed_point(const Json& raw, Checks& c) {
    const RunConfig cfg = parse_config(raw);
    Json sel;
    const ScatteringModel m = build_model(cfg, &sel);
    if (!sel.is_null()) c.note("cone_selection", sel);
    const ScatteringData data = default_data(cfg, m);
    const PerturbedSolution sol = solve_mixed_perturbed(m, data);
    const FixedPointReport& r = sol.report;
    c.note("report", to_json(r));
    if (!m.v2.is_zero()) c.le("contraction_ratio", r.contraction_ratio, 0.5);
    c.ge("bound_slack", r.bound_slack, 0.0);
    c.flag("cutoffs_inactive", r.cutoffs_inactive);
    c.le("energy_identity", std::abs(r.energy_error), 1e-6);
    const FlowReport fr = flow_consistency(m, data);
    c.le("flow_consistency", fr.max_error, m.v2.is_zero() ? 1e-8 : 1e-5);
}

void suite_eikonal(const Json& raw, Checks& c) {
    const RunConfig cfg = parse_config(raw);
    Json sel;
    const ScatteringModel m = build_model(cfg, &sel);
    if (!sel.is_null()) c.note("cone_selection", sel);
    const ScatteringData base = default_data(cfg, m);
    const Vec& om = base.omega;
    const double lam = base.lambda;
    Vec e = Vec::Zero(cfg.dim);
    e(std::abs(om(0)) < 0.9 ? 0 : 1) = 1.0;
    e = (e - e.dot(om) * om).normalized();
    const double th = std::acos(1.0 - m.sigma0);
    PhaseOptions po;
    po.rel_tol = 1e-8;
    const double tol_res = m.v2.is_zero() ? 1e-7 : 1e-4;
    double res = 0.0, grad = 0.0, curl = 0.0, path = 0.0, radial = 0.0;
    for (double r : {1.5 * m.R0, 3.0 * m.R0})
        for (double a : {0.0, 0.5 * th, -0.5 * th}) {
            const Vec x = r * (std::cos(a) * om + std::sin(a) * e);
            const PhaseSample s = eikonal_residual(m, x, om, lam, po);
            res = std::max(res, std::abs(s.residual) / (lam + std::abs(m.potential(x))));
            grad = std::max(grad, s.gradient_error / s.F.norm());
            if (a > 0.0) {
                curl = std::max(curl, curl_check(m, x, om, lam) * x.norm() / s.F.norm());
                FieldEvaluator fe(m);
                const double p1 = phase(fe, m, x, om, lam), p2 = phase_arc_ray(fe, m, x, om, lam);
                path = std::max(path, std::abs(p1 - p2));
                if (m.v2.is_zero()) radial = std::max(radial, std::abs(phase_radial(m, x, om, lam) - p1));
            }
        }
    c.le("eikonal_residual_relative", res, tol_res);
    c.le("gradient_error_relative", grad, 1e-5);
    c.le("curl_relative", curl, 1e-5);
    c.le("path_independence", path, 1e-6);
    if (m.v2.is_zero()) c.le("phase_radial_agreement", radial, 1e-8);
}

void suite_classification(const Json& raw, Checks& c) {
    const RunConfig cfg = parse_config(raw);
    Json sel;
    const ScatteringModel m = [&] {
        // select the cone at both test energies
        if (cfg.R0) return build_model(cfg, &sel);
        ScatteringModel mm = make_model(cfg.v1, cfg.v2, cfg.dim, cfg.solver);
        sel = to_json(select_cone(mm, {0.0, 0.3}));
        if (cfg.sigma0) mm.sigma0 = *cfg.sigma0;
        return mm;
    }();
    if (!sel.is_null()) c.note("cone_selection", sel);
    const PotentialField pf = PotentialField::of(TotalPotential{m.v1, m.v2});
    for (double lam : {0.0, 0.3}) {
        const std::string tag = lam == 0.0 ? "lambda0" : "lambda0.3";
        ScatteringData data = default_data(cfg, m);
        data.lambda = lam;
        const PerturbedSolution sol = solve_mixed_perturbed(m, data);
        const ClassificationResult self = classify_orbit(m, sol.y);
        c.le("self_T0_" + tag, std::abs(self.T0 - 1.0), 0.0);
        c.le("self_omega_" + tag, (self.omega_plus - data.omega).norm(), 1e-8);
        // generic incoming data: from far on one side, moving across
        Vec x0 = Vec::Zero(m.dim), v0 = Vec::Zero(m.dim);
        x0(0) = -20.0;
        x0(1) = 6.0;
        v0(0) = std::sqrt(2.0 * (lam - m.potential(x0)));
        const Trajectory tr = integrate_newton(pf, x0, v0, 0.0, 1e7);
        const ClassificationResult gen = classify_orbit(m, tr);
        c.le("generic_position_" + tag, gen.position_match, 1e-4);
        c.le("generic_velocity_" + tag, gen.velocity_match, 1e-4);
        c.note("generic_" + tag, to_json(gen));
    }
}

}  // namespace

Outputs cmd_validate(const Context& ctx, bool& pass) {
    Checks c;
    if (ctx.suite == "conditions") suite_conditions(ctx.raw, c);
    else if (ctx.suite == "radial_oracles") suite_radial(ctx.raw, c);
    else if (ctx.suite == "linforce") suite_linforce(ctx.raw, c);
    else if (ctx.suite == "fixed_point") suite_fixed_point(ctx.raw, c);
    else if (ctx.suite == "eikonal") suite_eikonal(ctx.raw, c);
    else if (ctx.suite == "classification") suite_classification(ctx.raw, c);
    else throw ConfigError("unknown suite '" + ctx.suite + "'");
    pass = c.pass();
    return {{"validation.json", dump_json(c.report(ctx.suite))}};
}

}  // namespace lowscat::cli
