#pragma once

#include <functional>
#include <vector>

#include "lowscat/potentials.hpp"
#include "lowscat/trajectory.hpp"

namespace lowscat {

/// Any potential given by value and gradient (not necessarily V₁ + V₂).
struct PotentialField {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;

    static PotentialField of(const TotalPotential& v);
};

/// Newton's equation by Dormand–Prince 5(4); records every accepted step.
/// Throws CoreEntryError if the orbit enters |x| < 1.
Trajectory integrate_newton(const PotentialField& v, const Vec& x0, const Vec& v0, double t0,
                            double t1, double tol = 1e-12);
/// Same, but records only at `times` (times[0] is the start time).
Trajectory integrate_newton(const PotentialField& v, const Vec& x0, const Vec& v0,
                            const std::vector<double>& times, double tol = 1e-12);

/// L_ij = x_i v_j - x_j v_i.
Mat angular_momentum(const Vec& x, const Vec& v);

struct AsymptoticReport {
    Vec omega_plus;        // lim x/|x|
    Vec omega_tilde_plus;  // lim ẋ/|ẋ|
    double decay_exponent_fit = 0.0;  // |ω(t) - ω⁺| ~ t^{-p}; NaN when ω(t) is constant
    double omega_residual = 0.0;      // |ω(t_end) - ω⁺|
    double position_growth = 0.0;     // log-log slope of |x(t)|
    double velocity_growth = 0.0;     // log-log slope of |ẋ(t)|
    double angular_momentum_growth = 0.0;
    double t_first = 0.0, t_last = 0.0;  // fit window
};

/// Fits ω(t) = ω⁺ + c t^{-p} over the last two decades of the trajectory.
AsymptoticReport omega_plus(const Trajectory& traj);

struct VirialReport {
    double T = 0.0;  // first time with x·ẋ >= 0 and |x| > R
    double R = 1.0;
    bool virial_pass = false;   // x·ẋ >= 2(t-T)λ
    bool growth_pass = false;   // x² >= 2λ(t-T)² + R²
    double virial_slack = 0.0;  // min over t >= T of x·ẋ - 2(t-T)λ
    double growth_slack = 0.0;
    double lower_constant = 0.0;  // min |x|/t^α over the tail
    double position_exponent = 0.0;
    double velocity_exponent = 0.0;
    double expected_position = 0.0;  // α at λ = 0, 1 otherwise
    double expected_velocity = 0.0;
};

VirialReport virial_check(const Trajectory& traj, const RadialPotential& pot,
                          const Perturbation& pert, double R = 1.0);

/// Least-squares slope of log y against log t over samples with t in [t_lo, t_hi].
double loglog_slope(const std::vector<double>& t, const std::vector<double>& y, double t_lo,
                    double t_hi);

struct SpiralResult {
    double mu = 1.0, c = 1.0, A = 0.0, B = 0.0;
    double a = 0.0;  // r(t) = a t^α on the exact orbit
    Trajectory trajectory;
    double drift = 0.0;  // sup |θ - c ln r| (unwrapped θ)
    double sweep = 0.0;  // total angle swept by x/|x|
};

/// V = r^{-μ}χ(θ - c ln r), χ(θ) = -A - B sin θ with A fixed by the
/// log-spiral condition; integrates the spiral from r0 over `decades` decades of r.
SpiralResult spiral_example(double mu, double c, double B, double r0 = 10.0,
                            double decades = 3.0, double tol = 1e-13);

}  // namespace lowscat
