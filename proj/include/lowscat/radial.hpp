#pragma once

#include <vector>

#include "lowscat/potentials.hpp"
#include "lowscat/trajectory.hpp"

namespace lowscat {

struct ScatteringData {
    Vec x;
    Vec omega;
    double lambda = 0.0;
};

/// Γ±_{R,σ}(ω).
struct Cone {
    double R = 1.0;
    double sigma = 0.5;
    Vec omega;
    int sign = +1;  // +1 outgoing, -1 incoming

    bool contains(const Vec& x) const;
};

/// Solution record of the planar radial problem. Convention: θ₁ <= 0, L >= 0.
struct PlanarOrbit {
    double lambda = 0.0;
    double L = 0.0;
    double r1 = 1.0;
    double theta1 = 0.0;
    double r_tp = 0.0;  // 0 is the sentinel for λ = L = 0
    double kappa = 0.0;
};

inline constexpr double default_kappa0_sq = 0.99;

/// Root of r²g(r)² = L². Returns 0 when λ = L = 0.
double turning_point(const RadialPotential& pot, double lambda, double L);

/// θ₁ as a function of κ = L/(r₁g(r₁)) in [-1,1].
double theta1_of_kappa(const RadialPotential& pot, double lambda, double r1, double kappa);
double theta1_of_L(const RadialPotential& pot, double lambda, double r1, double L,
                   double kappa0_sq = default_kappa0_sq);
/// Angle swept from the turning point to infinity; sign is -sign(L).
double theta_tp(const RadialPotential& pot, double lambda, double L);
double L_of_theta1(const RadialPotential& pot, double lambda, double r1, double theta1,
                   double kappa0_sq = default_kappa0_sq);

/// Largest |θ₁| reachable at (λ, r₁), i.e. κ = 1.
double allowed_angle(const RadialPotential& pot, double lambda, double r1);
/// π/2 - arctan√(C-1) with C = sup_{r'>=r>=1} V₁(r')/V₁(r) on a grid.
double allowed_angle_floor(const RadialPotential& pot, double r_max = 1e4, int n = 4000);
/// Cone opening keeping θ₁ within 90% of the floor.
double default_sigma0(const RadialPotential& pot);

PlanarOrbit make_planar_orbit(const RadialPotential& pot, double lambda, double r1,
                              double theta1, double kappa0_sq = default_kappa0_sq);

/// t(r) = 1 + ∫_{r₁}^r (2λ - 2V₁ - L²ρ^{-2})^{-1/2} dρ and its inverse.
class TimeRadiusMap {
public:
    TimeRadiusMap(const RadialPotential& pot, double lambda, double L, double r1);
    double t_of_r(double r) const;
    double r_of_t(double t) const;

private:
    double segment(double ra, double rb) const;
    const RadialPotential& pot_;
    double lambda_, L_, r1_;
};

/// Log-spaced grid on [1, t_max] with `intervals` intervals.
std::vector<double> log_time_grid(double t_max, int intervals);

/// Planar (2-D) orbit sampled at the given times (times[0] must be 1).
Trajectory planar_orbit_trajectory(const RadialPotential& pot, const PlanarOrbit& orbit,
                                   const std::vector<double>& times);

/// y = p₁ω - p₂e with e the unit vector along x̂ - (x̂·ω)ω.
Trajectory embed(const Vec& x, const Vec& omega, const Trajectory& planar);

struct MixedRadialSolution {
    PlanarOrbit orbit;
    Trajectory trajectory;
    Vec F1;
};

struct RadialOptions {
    double kappa0_sq = default_kappa0_sq;
    double sigma = -1.0;  // cone opening; negative = default_sigma0
};

MixedRadialSolution solve_mixed_radial(const RadialPotential& pot, const ScatteringData& data,
                                       const std::vector<double>& times,
                                       const RadialOptions& opt = {});

/// F₁(x) = ẏ(1) without building the trajectory.
Vec radial_field(const RadialPotential& pot, const Vec& x, const Vec& omega, double lambda,
                 double kappa0_sq = default_kappa0_sq);

/// ∂κ²/∂θ₁² at θ₁ = 0.
double kappa_sensitivity(const RadialPotential& pot, double lambda, double r1);

}  // namespace lowscat
