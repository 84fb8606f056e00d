#pragma once

#include <functional>
#include <vector>

#include "lowscat/types.hpp"

namespace lowscat {

/// Vector-valued function on a time grid starting at 1; column k at t[k].
struct WeightedGridFunction {
    std::vector<double> t;
    Mat values;  // d × n
    double s = 0.0;

    WeightedGridFunction() = default;
    WeightedGridFunction(std::vector<double> grid, int dim, double s_);

    int dim() const { return static_cast<int>(values.rows()); }
    int size() const { return static_cast<int>(t.size()); }
    /// ‖z‖_{-s} = (∫ |z|² t^{-2s} dt)^{1/2}, trapezoid rule in ln t.
    double weighted_norm() const;
    double max_norm() const;
};

/// Symmetric q(t) sampled on the grid, with the Hardy constant ε̄.
struct CoefficientPath {
    std::vector<double> t;
    std::vector<Mat> q;
    double epsilon_bar = 0.0;

    int dim() const { return q.empty() ? 0 : static_cast<int>(q.front().rows()); }
    static CoefficientPath sample(const std::function<Mat(double)>& qfun,
                                  const std::vector<double>& grid, double epsilon_bar);
};

/// inf over the grid of (t-1)²λ_min(q(t)) + ¼(1-ε̄²).
double hardy_margin(const CoefficientPath& qpath);

struct DecayingSolution {
    WeightedGridFunction z;
    Mat zdot;                     // d × n
    double residual = 0.0;        // discrete residual relative to the forcing
    double boundary_rate = 0.0;   // growth rate of the forcing at T_max (in ln t)
};

struct DecayingOptions {
    bool check_hardy = true;
};

/// Factorized operator for z'' - q z = f, z(1) = 0, z decaying. Works in
/// τ = ln t with u = t^{-1/2} z (Numerov), closed at T_max by the recessive
/// branch of the frozen coefficient plus a particular-solution correction.
/// The grid must be uniform in ln t (as produced by log_time_grid).
class DecayingSolver {
public:
    explicit DecayingSolver(const CoefficientPath& qpath, const DecayingOptions& opt = {});
    DecayingSolution solve(const WeightedGridFunction& rhs, double s) const;

    int dim() const { return d_; }
    const std::vector<double>& grid() const { return t_; }
    double epsilon_bar() const { return eps_bar_; }

private:
    std::vector<double> t_;
    int d_ = 0, n_ = 0;
    double h_ = 0.0, eps_bar_ = 0.0;
    std::vector<Mat> Q_;
    Mat K_;
    Eigen::VectorXd k_;
    std::vector<Mat> A_;                          // sub-diagonal blocks
    std::vector<Mat> Binv_;                       // inverses of the eliminated diagonal blocks
    std::vector<Mat> Cp_;
};

DecayingSolution solve_decaying(const CoefficientPath& qpath, const WeightedGridFunction& rhs,
                                double s, const DecayingOptions& opt = {});

/// Homogeneous solution with h(1) = 0, ḣ(1) = e₀ (grows at T_max).
WeightedGridFunction growing_homogeneous(const CoefficientPath& qpath, double s);

struct RefinementReport {
    std::vector<int> intervals;
    std::vector<double> differences;  // max |z_n - z_2n| on [1, T_max/2]
    double order = 0.0;
    double ratio = 0.0;
};

/// Solves on n0, 2n0, 4n0 intervals and measures the convergence order.
/// Throws ConvergenceError when the difference ratio exceeds 0.5.
RefinementReport refinement_study(const std::function<Mat(double)>& qfun,
                                  const std::function<Vec(double)>& ffun, int dim, double t_max,
                                  int n0, double s, double epsilon_bar);

/// Cross-check: solves with q + |ζ| for ζ = -10^{-k}, k = 6..8, and
/// extrapolates to ζ = 0 in powers |ζ|^k, |ζ| (k from the tail of q). Returns the max relative deviation from the direct solve on [1,10].
double resolvent_cross_check(const CoefficientPath& qpath, const WeightedGridFunction& rhs,
                             double s);

}  // namespace lowscat
