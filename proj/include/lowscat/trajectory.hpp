#pragma once

#include <vector>

#include "lowscat/types.hpp"

namespace lowscat {

/// Sampled orbit; column k of positions/velocities belongs to times[k].
struct Trajectory {
    std::vector<double> times;
    Mat positions;
    Mat velocities;
    double lambda = 0.0;
    std::vector<double> energy;  // ½|v|² + V(x) per sample, when known

    int dim() const { return static_cast<int>(positions.rows()); }
    int size() const { return static_cast<int>(times.size()); }
    Vec position(int k) const { return positions.col(k); }
    Vec velocity(int k) const { return velocities.col(k); }

    /// Cubic Hermite interpolation between samples.
    Vec sample_position(double t) const;
    Vec sample_velocity(double t) const;

    double max_energy_drift() const;
};

}  // namespace lowscat
