#include "lowscat/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace lowscat {

std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_string(std::ostream& os, const std::string& s) {
    // nlohmann handles escaping; a bare string dumps as a quoted literal
    os << Json(s).dump();
}

void write_value(std::ostream& os, const Json& j, int indent, int depth) {
    const std::string pad = indent > 0 ? std::string(indent * (depth + 1), ' ') : "";
    const std::string pad_end = indent > 0 ? std::string(indent * depth, ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    const char* sep = indent > 0 ? ": " : ":";
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << '{' << nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ',' << nl;
                first = false;
                os << pad;
                write_string(os, it.key());
                os << sep;
                write_value(os, it.value(), indent, depth + 1);
            }
            os << nl << pad_end << '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // numeric arrays stay on one line
            bool flat = true;
            for (const auto& e : j)
                if (e.is_structured()) flat = false;
            os << '[';
            bool first = true;
            for (const auto& e : j) {
                if (!first) os << (flat && indent > 0 ? ", " : ",");
                if (!flat) os << nl << pad;
                first = false;
                write_value(os, e, indent, depth + 1);
            }
            if (!flat) os << nl << pad_end;
            os << ']';
            return;
        }
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v)) os << fmt17(v);
            else os << "null";
            return;
        }
        default:
            os << j.dump();
    }
}

}  // namespace

void write_json(std::ostream& os, const Json& j, int indent) {
    write_value(os, j, indent, 0);
    os << '\n';
}

std::string dump_json(const Json& j, int indent) {
    std::ostringstream os;
    write_json(os, j, indent);
    return os.str();
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    const int d = tr.dim();
    const bool energy = static_cast<int>(tr.energy.size()) == tr.size();
    os << 't';
    for (int i = 1; i <= d; ++i) os << ",x" << i;
    for (int i = 1; i <= d; ++i) os << ",v" << i;
    if (energy) os << ",energy";
    os << '\n';
    for (int k = 0; k < tr.size(); ++k) {
        os << fmt17(tr.times[k]);
        for (int i = 0; i < d; ++i) os << ',' << fmt17(tr.positions(i, k));
        for (int i = 0; i < d; ++i) os << ',' << fmt17(tr.velocities(i, k));
        if (energy) os << ',' << fmt17(tr.energy[k]);
        os << '\n';
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        out.push_back(cell);
    }
    return out;
}

double parse_number(const std::string& s, int line) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("trajectory csv: bad number '" + s + "' on line " + std::to_string(line));
    }
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("trajectory csv: empty input");
    const std::vector<std::string> head = split_csv(line);
    int d = 0;
    while (d + 1 < static_cast<int>(head.size()) && head[d + 1] == "x" + std::to_string(d + 1)) ++d;
    const bool energy = !head.empty() && head.back() == "energy";
    const int cols = 1 + 2 * d + (energy ? 1 : 0);
    if (head.empty() || head[0] != "t" || d < 1 || static_cast<int>(head.size()) != cols)
        throw ConfigError("trajectory csv: expected header t,x1..xd,v1..vd[,energy]");
    for (int i = 0; i < d; ++i)
        if (head[1 + d + i] != "v" + std::to_string(i + 1))
            throw ConfigError("trajectory csv: expected header t,x1..xd,v1..vd[,energy]");
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = split_csv(line);
        if (static_cast<int>(cells.size()) != cols)
            throw ConfigError("trajectory csv: wrong column count on line " + std::to_string(lineno));
        std::vector<double> r;
        for (const auto& c : cells) r.push_back(parse_number(c, lineno));
        if (!rows.empty() && !(r[0] > rows.back()[0]))
            throw ConfigError("trajectory csv: times must increase (line " + std::to_string(lineno) + ")");
        rows.push_back(std::move(r));
    }
    Trajectory tr;
    const int n = static_cast<int>(rows.size());
    tr.positions.resize(d, n);
    tr.velocities.resize(d, n);
    for (int k = 0; k < n; ++k) {
        tr.times.push_back(rows[k][0]);
        for (int i = 0; i < d; ++i) {
            tr.positions(i, k) = rows[k][1 + i];
            tr.velocities(i, k) = rows[k][1 + d + i];
        }
        if (energy) tr.energy.push_back(rows[k][1 + 2 * d]);
    }
    if (energy && n > 0) tr.lambda = tr.energy.back();
    return tr;
}

void write_phase_csv(std::ostream& os, const std::vector<PhaseSample>& samples) {
    const int d = samples.empty() ? 0 : static_cast<int>(samples.front().x.size());
    for (int i = 1; i <= d; ++i) os << 'x' << i << ',';
    os << "phi";
    for (int i = 1; i <= d; ++i) os << ",gradphi" << i;
    os << ",residual\n";
    for (const PhaseSample& s : samples) {
        for (int i = 0; i < d; ++i) os << fmt17(s.x(i)) << ',';
        os << fmt17(s.phi);
        for (int i = 0; i < d; ++i) os << ',' << fmt17(s.grad_phi(i));
        os << ',' << fmt17(s.residual) << '\n';
    }
}

Json to_json(const Vec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json to_json(const PlanarOrbit& o) {
    return Json{{"lambda", o.lambda}, {"L", o.L},         {"r1", o.r1},
                {"theta1", o.theta1}, {"r_tp", o.r_tp}, {"kappa", o.kappa}};
}

Json to_json(const AsymptoticReport& r) {
    return Json{{"omega_plus", to_json(r.omega_plus)},
                {"omega_tilde_plus", to_json(r.omega_tilde_plus)},
                {"decay_exponent_fit", r.decay_exponent_fit},
                {"omega_residual", r.omega_residual},
                {"position_growth", r.position_growth},
                {"velocity_growth", r.velocity_growth},
                {"angular_momentum_growth", r.angular_momentum_growth},
                {"t_first", r.t_first},
                {"t_last", r.t_last}};
}

Json to_json(const VirialReport& r) {
    return Json{{"T", r.T},
                {"R", r.R},
                {"virial_pass", r.virial_pass},
                {"growth_pass", r.growth_pass},
                {"virial_slack", r.virial_slack},
                {"growth_slack", r.growth_slack},
                {"lower_constant", r.lower_constant},
                {"position_exponent", r.position_exponent},
                {"velocity_exponent", r.velocity_exponent},
                {"expected_position", r.expected_position},
                {"expected_velocity", r.expected_velocity}};
}

Json to_json(const ConditionReport& r) {
    return Json{{"margin_bound", r.margin_bound},
                {"margin_derivatives", r.margin_derivatives},
                {"margin_virial", r.margin_virial},
                {"margin_perturbation", r.margin_perturbation},
                {"margin_mu_range", r.margin_mu_range},
                {"margin_eps2", r.margin_eps2},
                {"eps2", r.eps2},
                {"limsup_hardy", r.limsup_hardy},
                {"limsup_second", r.limsup_second},
                {"limsup_velocity", r.limsup_velocity},
                {"eps_bar_lo", r.eps_bar_lo},
                {"eps_bar_hi", r.eps_bar_hi},
                {"feasible", r.feasible},
                {"eps_bar", r.eps_bar},
                {"margin_hardy", r.margin_hardy},
                {"margin_second", r.margin_second},
                {"margin_velocity", r.margin_velocity},
                {"all_positive", r.all_positive()}};
}

Json to_json(const FixedPointReport& r) {
    return Json{{"iterations", r.iterations},
                {"contraction_ratio", r.contraction_ratio},
                {"final_change", r.final_change},
                {"fixed_point_residual", r.fixed_point_residual},
                {"z_norm", r.z_norm},
                {"chi1_slack", r.chi1_slack},
                {"chi2_slack", r.chi2_slack},
                {"cutoffs_inactive", r.cutoffs_inactive},
                {"bound_slack", r.bound_slack},
                {"hardy_margin", r.hardy_margin},
                {"energy_error", r.energy_error},
                {"s", r.s},
                {"eps", r.eps}};
}

Json to_json(const R0Selection& r) {
    return Json{{"R0", r.R0},
                {"sigma0", r.sigma0},
                {"contraction_ratio", r.contraction_ratio},
                {"lipschitz_ratio", r.lipschitz_ratio},
                {"doublings", r.doublings}};
}

Json to_json(const ClassificationResult& r) {
    const ClassificationDiagnostics& d = r.diagnostics;
    Json j{{"omega_plus", to_json(r.omega_plus)}};
    j["omega_minus"] = r.omega_minus ? to_json(*r.omega_minus) : Json(nullptr);
    j["T0_minus"] = r.T0_minus ? Json(*r.T0_minus) : Json(nullptr);
    j["lambda"] = r.lambda;
    j["T0"] = r.T0;
    j["position_match"] = r.position_match;
    j["velocity_match"] = r.velocity_match;
    j["doublings"] = r.doublings;
    j["t_entry"] = r.t_entry;
    j["asymptotics"] = to_json(r.asymptotics);
    j["diagnostics"] = Json{{"time_ratio_max", d.time_ratio_max},
                            {"qtilde_max", d.qtilde_max},
                            {"qtilde_ceiling", d.qtilde_ceiling},
                            {"hardy_margin", d.hardy_margin},
                            {"condition_margin", d.condition_margin}};
    return j;
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace {

double number(const Json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing key '" + key + "'");
    const Json& v = j.at(key);
    if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("'" + key + "' must be finite");
    return x;
}

double number_or(const Json& j, const std::string& key, double fallback) {
    return j.contains(key) ? number(j, key) : fallback;
}

double positive(const Json& j, const std::string& key, double fallback) {
    const double v = number_or(j, key, fallback);
    if (!(v > 0.0)) throw ConfigError("'" + key + "' must be positive");
    return v;
}

std::string type_of(const Json& j, const std::string& what) {
    if (!j.is_object()) throw ConfigError(what + " must be an object");
    if (!j.contains("type") || !j.at("type").is_string())
        throw ConfigError(what + " needs a string 'type'");
    return j.at("type").get<std::string>();
}

}  // namespace

RadialPotential potential_from_json(const Json& j) {
    const std::string type = type_of(j, "potential");
    try {
        if (type == "power_law") return RadialPotential::power_law(number(j, "gamma"), number(j, "mu"));
        if (type == "coulomb") return RadialPotential::coulomb(number_or(j, "gamma", 1.0));
        if (type == "power_law_plus_short_range")
            return RadialPotential::power_law_plus_short_range(number(j, "gamma"), number(j, "mu"),
                                                               number(j, "beta"), number(j, "nu"));
        if (type == "free") return RadialPotential::free();
    } catch (const ConfigError&) {
        throw;
    } catch (const DomainError& e) {
        throw ConfigError(std::string("potential: ") + e.what());
    }
    throw ConfigError("unknown potential type '" + type + "'");
}

Perturbation perturbation_from_json(const Json& j, int dim) {
    const std::string type = type_of(j, "perturbation");
    if (type == "none") return Perturbation::none();
    if (type == "anisotropic_power") {
        const Vec a = vector_from_json(j.contains("direction") ? j.at("direction") : Json(),
                                       "perturbation.direction", dim);
        try {
            return Perturbation::anisotropic_power(number(j, "strength"), number(j, "mu"),
                                                   number(j, "eps2"), a);
        } catch (const ConfigError&) {
            throw;
        } catch (const DomainError& e) {
            throw ConfigError(std::string("perturbation: ") + e.what());
        }
    }
    throw ConfigError("unknown perturbation type '" + type + "'");
}

Vec vector_from_json(const Json& j, const std::string& name, int dim) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ConfigError("'" + name + "' must be an array of " + std::to_string(dim) + " numbers");
    Vec v(dim);
    for (int i = 0; i < dim; ++i) {
        if (!j[i].is_number()) throw ConfigError("'" + name + "' must contain numbers");
        v(i) = j[i].get<double>();
        if (!std::isfinite(v(i))) throw ConfigError("'" + name + "' must be finite");
    }
    return v;
}

Vec direction_from_json(const Json& j, const std::string& name, int dim) {
    const Vec v = vector_from_json(j, name, dim);
    const double n = v.norm();
    if (std::abs(1.0 - n) > 1e-8)
        throw ConfigError("'" + name + "' must be a unit vector (|" + name + "| = " + fmt17(n) + ")");
    return v / n;
}

RunConfig parse_config(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    c.raw = j;
    if (j.contains("dim")) {
        if (!j.at("dim").is_number_integer() || j.at("dim").get<int>() < 2)
            throw ConfigError("'dim' must be an integer >= 2");
        c.dim = j.at("dim").get<int>();
    } else if (j.contains("x") && j.at("x").is_array()) {
        c.dim = static_cast<int>(j.at("x").size());
        if (c.dim < 2) throw ConfigError("'x' must have at least 2 entries");
    }
    if (!j.contains("potential")) throw ConfigError("missing key 'potential'");
    c.v1 = potential_from_json(j.at("potential"));
    if (j.contains("perturbation")) c.v2 = perturbation_from_json(j.at("perturbation"), c.dim);
    if (j.contains("x")) c.x = vector_from_json(j.at("x"), "x", c.dim);
    if (j.contains("v")) c.v = vector_from_json(j.at("v"), "v", c.dim);
    if (j.contains("omega")) c.omega = direction_from_json(j.at("omega"), "omega", c.dim);
    if (j.contains("lambda")) {
        c.lambda = number(j, "lambda");
        if (*c.lambda < 0.0) throw ConfigError("'lambda' must be >= 0");
    }
    c.t0 = number_or(j, "t0", 0.0);
    c.t_end = number_or(j, "t_end", 1e6);
    if (!(c.t_end > c.t0)) throw ConfigError("'t_end' must exceed 't0'");
    c.tol = positive(j, "tol", 1e-12);
    if (j.contains("solver")) {
        const Json& s = j.at("solver");
        if (!s.is_object()) throw ConfigError("'solver' must be an object");
        c.solver.t_max = number_or(s, "t_max", c.solver.t_max);
        if (!(c.solver.t_max > 1.0)) throw ConfigError("'solver.t_max' must exceed 1");
        const double iv = number_or(s, "intervals", c.solver.intervals);
        if (iv < 8 || iv != std::floor(iv)) throw ConfigError("'solver.intervals' must be an integer >= 8");
        c.solver.intervals = static_cast<int>(iv);
        c.solver.tol = positive(s, "tol", c.solver.tol);
        const double mi = number_or(s, "max_iter", c.solver.max_iter);
        if (mi < 1 || mi != std::floor(mi)) throw ConfigError("'solver.max_iter' must be a positive integer");
        c.solver.max_iter = static_cast<int>(mi);
        c.solver.eps_factor = positive(s, "eps_factor", c.solver.eps_factor);
        if (c.solver.eps_factor >= 1.0) throw ConfigError("'solver.eps_factor' must be < 1");
    }
    if (j.contains("cone")) {
        const Json& k = j.at("cone");
        if (!k.is_object()) throw ConfigError("'cone' must be an object");
        if (k.contains("R0")) {
            c.R0 = number(k, "R0");
            if (*c.R0 < 1.0) throw ConfigError("'cone.R0' must be >= 1");
        }
        if (k.contains("sigma0")) {
            c.sigma0 = number(k, "sigma0");
            if (!(*c.sigma0 > 0.0 && *c.sigma0 <= 1.0)) throw ConfigError("'cone.sigma0' must lie in (0,1]");
        }
    }
    return c;
}

}  // namespace lowscat
