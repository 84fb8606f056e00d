#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lowscat/linforce.hpp"
#include "lowscat/potentials.hpp"
#include "lowscat/radial.hpp"
#include "lowscat/trajectory.hpp"

namespace lowscat {

struct PerturbedOptions {
    double t_max = 1e10;
    int intervals = 1000;
    double tol = 1e-10;  // Picard stopping rule, relative to max(1, ‖z‖_{-s})
    int max_iter = 200;
    double eps_factor = 0.9;  // ε = eps_factor·αε₂
    double kappa0_sq = default_kappa0_sq;
    bool check_cone = true;
};

/// V₁, V₂ and the constants of the fixed-point construction.
struct ScatteringModel {
    RadialPotential v1;
    Perturbation v2;
    int dim = 2;
    PerturbedOptions opt;
    ConditionReport conditions;
    double alpha = 0.0;
    double eps2 = 0.0;
    double eps = 0.0;          // weight exponent, ε < αε₂
    double s = 0.0;            // α + ½ - ε
    double epsilon_bar = 0.0;  // Hardy constant
    double R0 = 1.0;
    double sigma0 = 0.5;
    std::vector<double> grid;

    double potential(const Vec& x) const { return v1.value(x.norm()) + v2.value(x); }
    Vec force_gradient(const Vec& x) const { return gradient_v1(v1, x) + v2.gradient(x); }
    Cone cone(const Vec& omega) const { return Cone{R0, sigma0, omega, +1}; }
};

/// Builds the model; ε̄ comes from check_conditions. For V₂ = 0 the weight
/// exponent is centred, ε = α - ½. Throws DomainError when |α - ½ - ε| >= ε̄/2.
ScatteringModel make_model(const RadialPotential& v1, const Perturbation& v2, int dim,
                           const PerturbedOptions& opt = {});

struct FixedPointContext {
    const ScatteringModel* model = nullptr;
    ScatteringData data;
    PlanarOrbit orbit;
    Trajectory y1;
    CoefficientPath qpath;  // q = -∇²V₁(y₁)
    std::optional<DecayingSolver> solver;
    double s = 0.0;
    double eps = 0.0;
    double r_w = 0.0;  // 1 - s
    std::vector<char> chi_active;  // per node, from the last picard_map call
    double chi1_slack = 0.0;       // min (2/3 - |z|/|y₁|)
    double chi2_slack = 0.0;       // min (2 - |z|/t^{α-ε})
};

FixedPointContext make_context(const ScatteringModel& model, const ScatteringData& data);

/// -∫₀¹(1-l)∇³V₁(y₁+lz){z,z}dl - ∇V₂(y₁+z), Gauss–Legendre order 8 in l.
Vec taylor_residual(const ScatteringModel& model, const Vec& y1, const Vec& z);
Vec taylor_residual(const WeightedGridFunction& z, const FixedPointContext& ctx, int node);

/// P(z): decaying solution of w'' - q w = χ₁χ₂R(z). Optionally returns ẇ.
WeightedGridFunction picard_map(const WeightedGridFunction& z, FixedPointContext& ctx,
                                Mat* wdot = nullptr);

struct FieldSample {
    Vec x;
    Vec omega;
    double lambda = 0.0;
    Vec F;
    Vec F1;
};

struct FixedPointReport {
    int iterations = 0;
    double contraction_ratio = 0.0;  // max ‖z_{k+1}-z_k‖/‖z_k-z_{k-1}‖ above roundoff
    double final_change = 0.0;
    double fixed_point_residual = 0.0;  // ‖z - P(z)‖_{-s}
    double z_norm = 0.0;
    double chi1_slack = 0.0;
    double chi2_slack = 0.0;
    bool cutoffs_inactive = true;
    double bound_slack = 0.0;  // min over t of ½t^{α-ε} - |z(t)|
    double hardy_margin = 0.0;
    double energy_error = 0.0;  // ½|F|² + V(x) - λ
    double s = 0.0;
    double eps = 0.0;
};

struct PerturbedSolution {
    WeightedGridFunction z;
    Mat zdot;
    Trajectory y;
    FieldSample field;
    FixedPointReport report;
};

/// Picard iteration from z = 0 (or `warm`) on the model grid. Throws
/// CutoffActive when a cutoff is active at the fixed point and NonContraction
/// when successive changes stop shrinking.
PerturbedSolution solve_mixed_perturbed(const ScatteringModel& model, const ScatteringData& data,
                                        const WeightedGridFunction* warm = nullptr);

/// F(x) = ẏ(1).
Vec velocity_field(const ScatteringModel& model, const Vec& x, const Vec& omega, double lambda);

struct FlowReport {
    std::vector<double> t_checks;
    std::vector<double> errors;  // |ẏ(t̄) - F(y(t̄))| / g(|y(t̄)|)
    double max_error = 0.0;
};

/// Re-solves from y(t̄) at grid nodes nearest to 10^0..10^{n-1}.
FlowReport flow_consistency(const ScatteringModel& model, const ScatteringData& data,
                            int n_checks = 5);

/// max ‖P(z₁)-P(z₂)‖/‖z₁-z₂‖ over random pairs around the fixed point.
double lipschitz_probe(const ScatteringModel& model, const ScatteringData& data, int pairs = 10,
                       std::uint32_t seed = 12345);

struct R0Selection {
    double R0 = 1.0;
    double sigma0 = 0.5;
    double contraction_ratio = 0.0;  // worst over the probe set at R0
    double lipschitz_ratio = 0.0;
    int doublings = 0;
};

/// Doubles R from 1 until every probe point solves with inactive cutoffs and
/// both the iteration ratio and the Lipschitz probe are <= 0.5; halves σ
/// from min(0.5, default_sigma0) until probe orbits stay in the cone.
/// Stores the result in the model.
R0Selection select_cone(ScatteringModel& model, const std::vector<double>& lambdas = {0.0},
                        int max_doublings = 16);

struct ConeBoundReport {
    double eps_check_predicted = 0.0;  // min(ε/α, ε₂)
    double eps_check_fitted = 0.0;     // -slope of log|F̂-F̂₁| vs log|x|
    double C_dir = 0.0;                // (6.17) constant at the predicted exponent
    double C_a = 0.0, c_b = 0.0, C_c = 0.0;
    double psi_ratio_min = 0.0, psi_ratio_max = 0.0;  // ψ₁/θ₁ over samples with θ₁ > 0
    std::vector<double> direction_deviation;
    bool pass = false;  // all constants finite and c_b > 0
};

ConeBoundReport field_cone_bounds(const ScatteringModel& model,
                                  const std::vector<ScatteringData>& samples);

struct TruncationReport {
    std::vector<double> n;
    std::vector<double> field_deviation;     // |Fₙ(x) - F(x)|
    std::vector<double> jacobian_deviation;  // |∂ₓFₙ - ∂ₓF| (finite differences)
};

TruncationReport truncated_field_convergence(const ScatteringModel& model,
                                             const ScatteringData& data,
                                             const std::vector<double>& n_list);

struct BoundRow {
    std::string quantity;
    int order = 0;
    double fitted = 0.0;
    double predicted = 0.0;  // upper bound on the exponent
};

/// Central-difference derivatives of F, F - F₁, y(t_probe), ẏ(t_probe) or the
/// inverse bounds on |y|, fitted in |x| over the samples (x = r·x̂ for each r).
/// quantity ∈ {dF, dF_minus_dF1, dy, dydot, y_inverse_bounds}.
std::vector<BoundRow> bound_probe(const ScatteringModel& model, const std::string& quantity,
                                  const Vec& xhat, const Vec& omega, double lambda,
                                  const std::vector<double>& radii, double t_probe = 10.0);

/// Central-difference Jacobian J_ij = ∂_j f_i with per-coordinate step h.
Mat jacobian_fd(const std::function<Vec(const Vec&)>& f, const Vec& x, double h);

}  // namespace lowscat
