#include <CLI11.hpp>

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "commands.hpp"

namespace fs = std::filesystem;

namespace lowscat::cli {

namespace {

double lambda_of(const RunConfig& c) {
    if (!c.lambda) throw ConfigError("missing key 'lambda'");
    return *c.lambda;
}

const Vec& require(const std::optional<Vec>& v, const char* name) {
    if (!v) throw ConfigError(std::string("missing key '") + name + "'");
    return *v;
}

Json model_json(const ScatteringModel& m) {
    return Json{{"alpha", m.alpha},     {"eps2", m.eps2}, {"eps", m.eps},
                {"s", m.s},             {"epsilon_bar", m.epsilon_bar},
                {"R0", m.R0},           {"sigma0", m.sigma0},
                {"t_max", m.opt.t_max}, {"intervals", m.opt.intervals}};
}

std::string csv(const Trajectory& tr) {
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    return os.str();
}

Trajectory newton_orbit(const RunConfig& c) {
    const Vec& x = require(c.x, "x");
    const Vec& v = require(c.v, "v");
    const PotentialField pf = PotentialField::of(TotalPotential{c.v1, c.v2});
    if (c.t0 >= 0.0) return integrate_newton(pf, x, v, c.t0, c.t_end, c.tol);
    // state given at t = 0; run both ways and join
    const Trajectory back = integrate_newton(pf, x, v, 0.0, c.t0, c.tol);
    const Trajectory fwd = integrate_newton(pf, x, v, 0.0, c.t_end, c.tol);
    Trajectory tr;
    const int nb = back.size() - 1, nf = fwd.size();
    tr.times.assign(back.times.begin(), back.times.end() - 1);
    tr.times.insert(tr.times.end(), fwd.times.begin(), fwd.times.end());
    tr.positions.resize(c.dim, nb + nf);
    tr.velocities.resize(c.dim, nb + nf);
    tr.positions << back.positions.leftCols(nb), fwd.positions;
    tr.velocities << back.velocities.leftCols(nb), fwd.velocities;
    tr.energy.assign(back.energy.begin(), back.energy.end() - 1);
    tr.energy.insert(tr.energy.end(), fwd.energy.begin(), fwd.energy.end());
    tr.lambda = fwd.lambda;
    return tr;
}

Trajectory planar_orbit(const RunConfig& c, Json& info) {
    if (c.dim != 2) throw ConfigError("'planar' orbits are two-dimensional");
    const Json& p = c.raw.at("planar");
    if (!p.is_object() || !p.contains("r1") || !p.at("r1").is_number())
        throw ConfigError("'planar' needs a number 'r1'");
    const double lam = lambda_of(c);
    const double r1 = p.at("r1").get<double>();
    if (!(r1 >= 1.0)) throw ConfigError("'planar.r1' must be >= 1");
    double theta1 = 0.0, k0 = default_kappa0_sq;
    if (p.contains("theta1") && p.at("theta1").is_number()) {
        theta1 = p.at("theta1").get<double>();
    } else if (p.contains("kappa") && p.at("kappa").is_number()) {
        const double k = p.at("kappa").get<double>();
        if (!(k >= 0.0 && k <= 1.0)) throw ConfigError("'planar.kappa' must lie in [0,1]");
        theta1 = theta1_of_kappa(c.v1, lam, r1, k);
        k0 = std::max(k0, k * k);
    } else if (p.contains("L") && p.at("L").is_number()) {
        const double L = std::abs(p.at("L").get<double>());
        const double k = L / (r1 * g(c.v1, lam, r1));
        if (k > 1.0) throw ConfigError("'planar.L' exceeds r1 g(r1)");
        theta1 = theta1_of_kappa(c.v1, lam, r1, k);
        k0 = std::max(k0, k * k);
    } else {
        throw ConfigError("'planar' needs one of 'theta1', 'kappa', 'L'");
    }
    const PlanarOrbit orbit = make_planar_orbit(c.v1, lam, r1, theta1, k0);
    info["planar_orbit"] = to_json(orbit);
    if (orbit.L > 0.0 || lam > 0.0) info["theta_tp"] = theta_tp(c.v1, lam, orbit.L);
    return planar_orbit_trajectory(c.v1, orbit, log_time_grid(c.solver.t_max, c.solver.intervals));
}

Trajectory mixed_orbit(const RunConfig& c, Json& info) {
    const ScatteringData data{require(c.x, "x"), require(c.omega, "omega"), lambda_of(c)};
    if (c.v2.is_zero()) {
        RadialOptions ro;
        ro.kappa0_sq = c.solver.kappa0_sq;
        ro.sigma = 2.0;  // any admissible angle
        MixedRadialSolution sol =
            solve_mixed_radial(c.v1, data, log_time_grid(c.solver.t_max, c.solver.intervals), ro);
        info["planar_orbit"] = to_json(sol.orbit);
        info["F"] = to_json(sol.F1);
        return std::move(sol.trajectory);
    }
    Json sel;
    const ScatteringModel m = build_model(c, &sel);
    PerturbedSolution sol = solve_mixed_perturbed(m, data);
    info["model"] = model_json(m);
    if (!sel.is_null()) info["cone_selection"] = sel;
    info["F"] = to_json(sol.field.F);
    info["report"] = to_json(sol.report);
    return std::move(sol.y);
}

}  // namespace

ScatteringModel build_model(const RunConfig& cfg, Json* selection) {
    ScatteringModel m = make_model(cfg.v1, cfg.v2, cfg.dim, cfg.solver);
    if (cfg.R0) {
        m.R0 = *cfg.R0;
    } else {
        const R0Selection sel = select_cone(m, {cfg.lambda.value_or(0.0)});
        if (selection) *selection = to_json(sel);
    }
    if (cfg.sigma0) m.sigma0 = *cfg.sigma0;
    return m;
}

Outputs cmd_orbit(const Context& ctx) {
    const RunConfig c = parse_config(ctx.raw);
    Json info;
    Trajectory tr;
    if (c.raw.contains("planar")) tr = planar_orbit(c, info);
    else if (c.v) tr = newton_orbit(c);
    else if (c.omega) tr = mixed_orbit(c, info);
    else throw ConfigError("orbit needs 'v' (initial value), 'omega' (mixed) or 'planar'");
    Json out{{"lambda", tr.energy.empty() ? tr.lambda : tr.energy.back()}};
    if (!tr.energy.empty()) out["energy_drift"] = tr.max_energy_drift();
    for (auto it = info.begin(); it != info.end(); ++it) out[it.key()] = it.value();
    try {
        out["asymptotics"] = to_json(omega_plus(tr));
    } catch (const Error& e) {
        out["asymptotics"] = nullptr;
        out["asymptotics_note"] = e.what();
    }
    out["virial"] = to_json(virial_check(tr, c.v1, c.v2));
    return {{"trajectory.csv", csv(tr)}, {"orbit.json", dump_json(out)}};
}

Outputs cmd_mixed(const Context& ctx) {
    const RunConfig c = parse_config(ctx.raw);
    const ScatteringData data{require(c.x, "x"), require(c.omega, "omega"), lambda_of(c)};
    Json sel;
    const ScatteringModel m = build_model(c, &sel);
    const PerturbedSolution sol = solve_mixed_perturbed(m, data);
    Json out{{"model", model_json(m)}};
    if (!sel.is_null()) out["cone_selection"] = sel;
    out["x"] = to_json(data.x);
    out["omega"] = to_json(data.omega);
    out["lambda"] = data.lambda;
    out["F"] = to_json(sol.field.F);
    out["F1"] = to_json(sol.field.F1);
    out["report"] = to_json(sol.report);
    return {{"trajectory.csv", csv(sol.y)}, {"mixed.json", dump_json(out)}};
}

Outputs cmd_phase(const Context& ctx) {
    const RunConfig c = parse_config(ctx.raw);
    const Vec& om = require(c.omega, "omega");
    const double lam = lambda_of(c);
    if (!c.raw.contains("phase_grid") || !c.raw.at("phase_grid").is_object())
        throw ConfigError("missing object 'phase_grid' with 'radii' and 'angles'");
    const Json& pg = c.raw.at("phase_grid");
    auto list = [&](const char* key) {
        if (!pg.contains(key) || !pg.at(key).is_array() || pg.at(key).empty())
            throw ConfigError(std::string("'phase_grid.") + key + "' must be a non-empty array");
        std::vector<double> v;
        for (const auto& e : pg.at(key)) {
            if (!e.is_number()) throw ConfigError(std::string("'phase_grid.") + key + "' must contain numbers");
            v.push_back(e.get<double>());
        }
        return v;
    };
    const std::vector<double> radii = list("radii"), angles = list("angles");
    PhaseOptions po;
    if (pg.contains("rel_tol")) {
        if (!pg.at("rel_tol").is_number() || !(pg.at("rel_tol").get<double>() > 0.0))
            throw ConfigError("'phase_grid.rel_tol' must be positive");
        po.rel_tol = pg.at("rel_tol").get<double>();
    }
    // second axis of the grid plane
    Vec e = Vec::Zero(c.dim);
    if (pg.contains("plane")) e = vector_from_json(pg.at("plane"), "phase_grid.plane", c.dim);
    else e(std::abs(om(0)) < 0.9 ? 0 : 1) = 1.0;
    e -= e.dot(om) * om;
    if (e.norm() < 1e-8) throw ConfigError("'phase_grid.plane' is parallel to omega");
    e.normalize();

    Json sel;
    const ScatteringModel m = build_model(c, &sel);
    std::vector<Vec> pts;
    for (double r : radii)
        for (double a : angles) pts.push_back(r * (std::cos(a) * om + std::sin(a) * e));
    const Cone cone = m.cone(om);
    for (const Vec& p : pts)
        if (!cone.contains(p)) throw ConeError("phase grid point outside the cone of radius R0");

    std::vector<PhaseSample> samples(pts.size());
    std::exception_ptr failure;
    std::mutex mu;
    auto work = [&](size_t begin, size_t stride) {
        for (size_t i = begin; i < pts.size(); i += stride) {
            try {
                samples[i] = eikonal_residual(m, pts[i], om, lam, po);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const int nt = std::max(1, std::min<int>(ctx.threads, static_cast<int>(pts.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(work, t, nt);
    work(0, nt);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    double res = 0.0, grad = 0.0, energy = 0.0;
    for (const PhaseSample& s : samples) {
        const double scale = lam + std::abs(m.potential(s.x));
        res = std::max(res, std::abs(s.residual) / scale);
        grad = std::max(grad, s.gradient_error / s.F.norm());
        energy = std::max(energy, std::abs(s.energy_identity) / scale);
    }
    Json out{{"model", model_json(m)}};
    if (!sel.is_null()) out["cone_selection"] = sel;
    out["points"] = samples.size();
    out["max_relative_residual"] = res;
    out["max_relative_gradient_error"] = grad;
    out["max_relative_energy_identity"] = energy;
    std::ostringstream os;
    write_phase_csv(os, samples);
    return {{"phase.csv", os.str()}, {"phase.json", dump_json(out)}};
}

Outputs cmd_classify(const Context& ctx) {
    const RunConfig c = parse_config(ctx.raw);
    Trajectory tr;
    if (c.raw.contains("trajectory_csv")) {
        if (!c.raw.at("trajectory_csv").is_string()) throw ConfigError("'trajectory_csv' must be a path");
        fs::path p = c.raw.at("trajectory_csv").get<std::string>();
        if (p.is_relative()) p = fs::path(ctx.config_dir) / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot open " + p.string());
        tr = read_trajectory_csv(in);
        if (tr.dim() != c.dim) throw ConfigError("trajectory dimension differs from 'dim'");
    } else {
        tr = newton_orbit(c);
    }
    RunConfig cm = c;
    if (!cm.lambda && !tr.energy.empty()) cm.lambda = std::max(0.0, tr.energy.back());
    Json sel;
    const ScatteringModel m = build_model(cm, &sel);
    ClassifyOptions co;
    if (c.raw.contains("classify")) {
        const Json& k = c.raw.at("classify");
        if (!k.is_object()) throw ConfigError("'classify' must be an object");
        if (k.contains("position_tol")) co.position_tol = k.at("position_tol").get<double>();
        if (k.contains("velocity_tol")) co.velocity_tol = k.at("velocity_tol").get<double>();
        if (!(co.position_tol > 0.0 && co.velocity_tol > 0.0))
            throw ConfigError("classification tolerances must be positive");
    }
    const ClassificationResult res = classify_orbit(m, tr, co);
    Json out{{"model", model_json(m)}};
    if (!sel.is_null()) out["cone_selection"] = sel;
    out["classification"] = to_json(res);
    return {{"classification.json", dump_json(out)}};
}

Outputs cmd_probe(const Context& ctx) {
    const RunConfig c = parse_config(ctx.raw);
    if (!c.raw.contains("probe") || !c.raw.at("probe").is_object())
        throw ConfigError("missing object 'probe'");
    const Json& p = c.raw.at("probe");
    if (!p.contains("quantity") || !p.at("quantity").is_string())
        throw ConfigError("'probe.quantity' must be a string");
    const std::string q = p.at("quantity").get<std::string>();
    const Vec& om = require(c.omega, "omega");
    const double lam = lambda_of(c);
    Json sel;
    const ScatteringModel m = build_model(c, &sel);
    Json out{{"model", model_json(m)}, {"quantity", q}};
    if (!sel.is_null()) out["cone_selection"] = sel;
    std::ostringstream os;
    if (q == "dF" || q == "dF_minus_dF1" || q == "dy" || q == "dydot" || q == "y_inverse_bounds") {
        const Vec xhat = direction_from_json(p.contains("xhat") ? p.at("xhat") : Json(), "probe.xhat", c.dim);
        std::vector<double> radii;
        if (!p.contains("radii") || !p.at("radii").is_array()) throw ConfigError("'probe.radii' must be an array");
        for (const auto& r : p.at("radii")) radii.push_back(r.get<double>());
        const double tp = p.contains("t_probe") ? p.at("t_probe").get<double>() : 10.0;
        const std::vector<BoundRow> rows = bound_probe(m, q, xhat, om, lam, radii, tp);
        os << "quantity,order,fitted,predicted\n";
        Json arr = Json::array();
        for (const BoundRow& r : rows) {
            os << r.quantity << ',' << r.order << ',' << fmt17(r.fitted) << ',' << fmt17(r.predicted) << '\n';
            arr.push_back(Json{{"quantity", r.quantity}, {"order", r.order}, {"fitted", r.fitted},
                               {"predicted", r.predicted}, {"within_bound", r.fitted <= r.predicted + 0.05}});
        }
        out["rows"] = arr;
        return {{"probe.csv", os.str()}, {"probe.json", dump_json(out)}};
    }
    const ScatteringData data{require(c.x, "x"), om, lam};
    if (q == "lipschitz") {
        out["lipschitz_ratio"] = lipschitz_probe(m, data);
    } else if (q == "flow") {
        const FlowReport fr = flow_consistency(m, data);
        Json t = Json::array(), e = Json::array();
        for (size_t i = 0; i < fr.errors.size(); ++i) {
            t.push_back(fr.t_checks[i]);
            e.push_back(fr.errors[i]);
        }
        out["t_checks"] = t;
        out["errors"] = e;
        out["max_error"] = fr.max_error;
    } else if (q == "truncation") {
        std::vector<double> ns;
        if (!p.contains("n_list") || !p.at("n_list").is_array()) throw ConfigError("'probe.n_list' must be an array");
        for (const auto& n : p.at("n_list")) ns.push_back(n.get<double>());
        const TruncationReport tr = truncated_field_convergence(m, data, ns);
        os << "n,field_deviation,jacobian_deviation\n";
        for (size_t i = 0; i < tr.n.size(); ++i)
            os << fmt17(tr.n[i]) << ',' << fmt17(tr.field_deviation[i]) << ','
               << fmt17(tr.jacobian_deviation[i]) << '\n';
        out["points"] = tr.n.size();
        return {{"probe.csv", os.str()}, {"probe.json", dump_json(out)}};
    } else {
        throw ConfigError("unknown probe quantity '" + q + "'");
    }
    return {{"probe.json", dump_json(out)}};
}

}  // namespace lowscat::cli

namespace {

int run(const std::string& name, lowscat::cli::Context& ctx, const std::string& config,
        const std::string& out_dir) {
    using namespace lowscat;
    try {
        ctx.raw = load_json_file(config);
        ctx.config_dir = fs::absolute(config).parent_path().string();
        cli::Outputs files;
        bool pass = true;
        if (name == "orbit") files = cli::cmd_orbit(ctx);
        else if (name == "mixed") files = cli::cmd_mixed(ctx);
        else if (name == "phase") files = cli::cmd_phase(ctx);
        else if (name == "classify") files = cli::cmd_classify(ctx);
        else if (name == "probe") files = cli::cmd_probe(ctx);
        else files = cli::cmd_validate(ctx, pass);
        fs::create_directories(out_dir);
        for (const auto& [file, body] : files) {
            std::ofstream os(fs::path(out_dir) / file, std::ios::binary);
            os << body;
            if (!os) throw std::runtime_error("cannot write " + (fs::path(out_dir) / file).string());
        }
        if (!pass) {
            std::cerr << "validate: suite '" << ctx.suite << "' failed (see validation.json)\n";
            return 2;
        }
        return 0;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Json::exception& e) {
        // wrong value type in an otherwise well-formed config
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-energy classical scattering: orbits, mixed problems, phases, classification"};
    app.require_subcommand(1);
    std::string config, out_dir = ".", suite;
    int threads = 1;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"orbit", "Integrate an orbit (initial value, mixed or planar) to trajectory.csv"},
        {"mixed", "Solve the mixed problem at (x, omega, lambda)"},
        {"phase", "Phase and eikonal residual on a cone grid"},
        {"classify", "Classify a scattering orbit"},
        {"validate", "Run a validation suite"},
        {"probe", "Derivative-bound and fixed-point probes"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--threads", threads, "Worker threads for grid sweeps")->check(CLI::PositiveNumber);
        if (name == "validate")
            sub->add_option("--suite", suite, "Suite name")
                ->required()
                ->check(CLI::IsMember({"conditions", "radial_oracles", "linforce", "fixed_point",
                                       "eikonal", "classification"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    lowscat::cli::Context ctx;
    ctx.suite = suite;
    ctx.threads = threads;
    return run(app.get_subcommands().front()->get_name(), ctx, config, out_dir);
}
