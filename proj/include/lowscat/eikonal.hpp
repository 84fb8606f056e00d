#pragma once

#include <optional>
#include <vector>

#include "lowscat/asymptotics.hpp"
#include "lowscat/perturbed.hpp"

namespace lowscat {

/// Evaluates F(·, ω, λ), warm-starting each fixed-point solve from the nearest recent one.
class FieldEvaluator {
public:
    explicit FieldEvaluator(const ScatteringModel& model) : model_(model) {}
    Vec operator()(const Vec& x, const Vec& omega, double lambda);
    int solves() const { return solves_; }

private:
    const ScatteringModel& model_;
    std::vector<std::pair<Vec, WeightedGridFunction>> cache_;  // recent (x, z), nearest used as warm start
    size_t next_ = 0;
    int solves_ = 0;
};

struct PhaseOptions {
    double rel_tol = 1e-12;  // adaptive quadrature over l
};

/// φ(x) = (x - R₀ω)·∫₀¹F(l(x - R₀ω) + R₀ω)dl + √(2λ)R₀. Throws ConeError when
/// the segment leaves Γ⁺_{R₀,σ₀}(ω).
double phase(const ScatteringModel& model, const Vec& x, const Vec& omega, double lambda,
             const PhaseOptions& opt = {});
double phase(FieldEvaluator& field, const ScatteringModel& model, const Vec& x, const Vec& omega,
             double lambda, const PhaseOptions& opt = {});

/// Route through R₀x̂: great-circle arc from R₀ω to R₀x̂, then the ray to x.
double phase_arc_ray(FieldEvaluator& field, const ScatteringModel& model, const Vec& x,
                     const Vec& omega, double lambda, const PhaseOptions& opt = {});

/// V₂ = 0 only: φ̃ = r∫_{R₀/r}^1 g(lr)√(1-κ²)dl plus the arc term, with κ from
/// the radial shooting problem.
double phase_radial(const ScatteringModel& model, const Vec& x, const Vec& omega, double lambda,
                    const PhaseOptions& opt = {});

/// φ⁻(x, ω, λ) = -φ⁺(x, -ω, λ).
double incoming_phase(const ScatteringModel& model, const Vec& x, const Vec& omega,
                      double lambda, const PhaseOptions& opt = {});

struct PhaseSample {
    Vec x;
    Vec omega;
    double lambda = 0.0;
    double phi = 0.0;
    Vec grad_phi;
    Vec F;
    double residual = 0.0;         // ½|∇φ|² + V(x) - λ
    double gradient_error = 0.0;   // |∇φ - F|
    double energy_identity = 0.0;  // ½|F|² + V(x) - λ
    double fd_estimate = 0.0;      // |∇φ (5-point) - ∇φ (3-point)|
    double step = 0.0;
    bool one_sided = false;
};

/// ∇φ by 5-point differences with step |x|·1e-4 per coordinate; the step is
/// halved (then one-sided) when the stencil would leave the cone.
PhaseSample eikonal_residual(const ScatteringModel& model, const Vec& x, const Vec& omega,
                             double lambda, const PhaseOptions& opt = {});

/// max over i<j of |∂ᵢF_j - ∂_jF_i| (central differences, step |x|·1e-4).
double curl_check(const ScatteringModel& model, const Vec& x, const Vec& omega, double lambda);

struct ClassificationDiagnostics {
    double time_ratio_max = 0.0;   // max (t-1)/t̃(|lz̃ + y₁|) on the window
    double qtilde_max = 0.0;       // max (t-1)q̃(t)
    double qtilde_ceiling = 0.0;   // ½(1 + ε̄)
    double hardy_margin = 0.0;     // inf (t-1)²λ_min(q) + ¼(1-ε̄²) with q = -∫∇²V₁
    double condition_margin = 0.0; // the ½(1+ε̄) ceiling margin from check_conditions
};

struct ClassificationResult {
    Vec omega_plus;
    std::optional<Vec> omega_minus;  // when the trajectory also covers t -> -∞
    std::optional<double> T0_minus;
    double lambda = 0.0;
    double T0 = 0.0;
    double position_match = 0.0;  // sup |x(t) - y(t - T + 1)|/|x(t)| on [T0, 10T0]
    double velocity_match = 0.0;  // sup |ẋ(t) - F(x(t))|/g(|x(t)|) on [T0, 10T0]
    int doublings = 0;
    double t_entry = 0.0;         // first cone-entry time
    AsymptoticReport asymptotics;
    ClassificationDiagnostics diagnostics;
};

struct ClassifyOptions {
    double position_tol = 1e-4;
    double velocity_tol = 1e-4;
    int max_doublings = 20;
    int velocity_checks = 5;  // log-spaced points in [T, 10T] for the velocity match
};

/// Finds T₀ such that the mixed solution from x(T₀) reproduces the orbit on
/// [T₀, 10T₀]. Samples with t < 0 (if any) are classified on the incoming side
/// by time reversal. Throws NoMatch when the orbit does not escape or no T passes.
ClassificationResult classify_orbit(const ScatteringModel& model, const Trajectory& traj,
                                    const ClassifyOptions& opt = {});

}  // namespace lowscat
