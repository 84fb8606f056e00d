#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowscat/eikonal.hpp"

namespace lowscat {

// Insertion-ordered so that written files are byte-identical across runs.
using Json = nlohmann::ordered_json;

/// Malformed or out-of-schema configuration.
class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

/// %.17g; non-finite values become "nan"/"inf"/"-inf".
std::string fmt17(double v);

/// JSON with every floating value at 17 significant digits; NaN/inf as null.
void write_json(std::ostream& os, const Json& j, int indent = 2);
std::string dump_json(const Json& j, int indent = 2);

/// Header t,x1..xd,v1..vd,energy (energy column only when known).
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
Trajectory read_trajectory_csv(std::istream& is);

/// Header x1..xd,phi,gradphi1..gradphid,residual.
void write_phase_csv(std::ostream& os, const std::vector<PhaseSample>& samples);

Json to_json(const Vec& v);
Json to_json(const PlanarOrbit& o);
Json to_json(const AsymptoticReport& r);
Json to_json(const VirialReport& r);
Json to_json(const ConditionReport& r);
Json to_json(const FixedPointReport& r);
Json to_json(const R0Selection& r);
Json to_json(const ClassificationResult& r);

/// Parses a file; syntax errors become ConfigError.
Json load_json_file(const std::string& path);

/// {"type": "power_law", "gamma", "mu"} | {"type": "coulomb", "gamma"} |
/// {"type": "power_law_plus_short_range", "gamma", "mu", "beta", "nu"} | {"type": "free"}
RadialPotential potential_from_json(const Json& j);
/// {"type": "none"} | {"type": "anisotropic_power", "strength", "mu", "eps2", "direction"}
Perturbation perturbation_from_json(const Json& j, int dim);
/// Vector of exactly `dim` finite entries.
Vec vector_from_json(const Json& j, const std::string& name, int dim);
/// As vector_from_json, then renormalized when |1 - |ω|| <= 1e-8; rejected otherwise.
Vec direction_from_json(const Json& j, const std::string& name, int dim);

/// Command configuration. Only the keys a command reads are required.
struct RunConfig {
    Json raw;
    int dim = 2;
    RadialPotential v1 = RadialPotential::coulomb(1.0);
    Perturbation v2;
    std::optional<Vec> x;
    std::optional<Vec> v;
    std::optional<Vec> omega;
    std::optional<double> lambda;
    double t0 = 0.0;
    double t_end = 1e6;
    double tol = 1e-12;  // integrator tolerance
    PerturbedOptions solver;
    std::optional<double> R0;  // absent: select_cone
    std::optional<double> sigma0;
};

RunConfig parse_config(const Json& j);

}  // namespace lowscat
