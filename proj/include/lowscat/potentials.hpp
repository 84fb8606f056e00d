#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lowscat/types.hpp"

namespace lowscat {

struct RadialDerivs {
    double v = 0, d1 = 0, d2 = 0, d3 = 0;
};

/// V₁(r) for r >= 1 with derivatives to third order.
class RadialPotential {
public:
    using Fn = std::function<double(double)>;
    using DerivFn = std::function<RadialDerivs(double)>;

    RadialPotential(std::string name, DerivFn all, double mu, double eps1, double eps1_tilde);

    static RadialPotential power_law(double gamma, double mu);
    static RadialPotential coulomb(double gamma);
    /// -γ r^{-μ} - β r^{-ν}; requires ν in (0,2).
    static RadialPotential power_law_plus_short_range(double gamma, double mu, double beta,
                                                      double nu);
    /// V ≡ 0. Violates the decay conditions; only good for free-motion runs.
    static RadialPotential free();
    /// User potential; derivatives by central differences.
    static RadialPotential from_function(std::string name, Fn v, double mu, double eps1,
                                         double eps1_tilde);

    double value(double r) const { return all_(r).v; }
    double d1(double r) const { return all_(r).d1; }
    double d2(double r) const { return all_(r).d2; }
    double d3(double r) const { return all_(r).d3; }
    RadialDerivs derivs(double r) const { return all_(r); }

    double mu() const { return mu_; }
    double eps1() const { return eps1_; }
    double eps1_tilde() const { return eps1_tilde_; }
    double alpha() const { return 2.0 / (2.0 + mu_); }
    const std::string& name() const { return name_; }
    bool is_free() const { return free_; }

private:
    std::string name_;
    DerivFn all_;
    double mu_, eps1_, eps1_tilde_;
    bool free_ = false;
};

/// V₂(x) with gradient and Hessian, optionally truncated at radius n.
class Perturbation {
public:
    using ValueFn = std::function<double(const Vec&)>;
    using GradFn = std::function<Vec(const Vec&)>;
    using HessFn = std::function<Mat(const Vec&)>;

    Perturbation() = default;  // V₂ ≡ 0

    static Perturbation none() { return {}; }
    /// s (a·x) <x>^{-μ-ε₂-1}; decays like <x>^{-μ-ε₂}.
    static Perturbation anisotropic_power(double strength, double mu, double eps2,
                                          const Vec& direction);
    static Perturbation from_functions(std::string name, ValueFn v, GradFn grad, HessFn hess,
                                       double eps2, int dim = 0);

    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    Mat hessian(const Vec& x) const;

    bool is_zero() const { return !v_; }
    double eps2() const { return eps2_; }
    int dim() const { return dim_; }
    std::optional<double> truncation_radius() const { return trunc_; }
    const std::string& name() const { return name_; }

    /// V₂,ₙ = F(|x|/n < 1) V₂.
    Perturbation truncated(double n) const;

private:
    std::string name_ = "none";
    ValueFn v_;
    GradFn grad_;
    HessFn hess_;
    double eps2_ = 0.0;
    int dim_ = 0;
    std::optional<double> trunc_;
};

/// V = V₁(|x|) + V₂(x).
struct TotalPotential {
    RadialPotential v1;
    Perturbation v2;

    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
};

/// Smooth step F(s < e): 1 for s <= e/2, 0 for s >= 3e/4, quintic in between.
double step_below(double s, double e);
/// ds-derivative of step_below.
double step_below_d1(double s, double e);
double step_below_d2(double s, double e);

/// √(2λ − 2V₁(r)).
double g(const RadialPotential& pot, double lambda, double r);

/// ∫₁^r (−2V₁)^{-1/2}: arrival time of the zero-energy radial orbit.
double t_tilde(const RadialPotential& pot, double r);

Vec gradient_v1(const RadialPotential& pot, const Vec& y);
Mat hessian_v1(const RadialPotential& pot, const Vec& y);
/// ∇³V₁(y){z,z} as a vector.
Vec third_contract_v1(const RadialPotential& pot, const Vec& y, const Vec& z);

struct ConditionReport {
    std::vector<double> r;  // sample grid
    std::vector<double> t_tilde;

    // Positive = satisfied with that slack. For the bound and virial
    // conditions the margin is the largest admissible constant; for the
    // derivative-decay conditions it is 0.05 minus the worst tail log-slope
    // of the scaled derivative.
    double margin_bound = 0;        // min -V₁ r^μ
    double margin_derivatives = 0;  // V₁ derivative decay
    double margin_virial = 0;       // min 2 + rV₁'/V₁
    double margin_perturbation = 0; // V₂ derivative decay
    double margin_mu_range = 0;     // min(μ, 2-μ)
    double margin_eps2 = 0;         // (2-μ)/4 - ε₂
    double eps2 = 0;                // ε₂ used (default (2-μ)/4 if V₂ = 0)

    double limsup_hardy = 0;     // r^{-1} V₁' t̃²
    double limsup_second = 0;    // V₁'' t̃²
    double limsup_velocity = 0;  // (-V₁'/√(-2V₁)) t̃

    double eps_bar_lo = 0, eps_bar_hi = 0;
    bool feasible = false;
    double eps_bar = 0;  // midpoint when feasible

    // Margins against the ceilings ¼(1-ε̄²) and ½(1+ε̄) at eps_bar.
    double margin_hardy = 0, margin_second = 0, margin_velocity = 0;

    bool all_positive() const;
};

ConditionReport check_conditions(const RadialPotential& pot, const Perturbation& pert,
                                 double r_max = 1e4, int n_samples = 400);

}  // namespace lowscat
