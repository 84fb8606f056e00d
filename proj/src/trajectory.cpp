#include "lowscat/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace lowscat {

namespace {

struct Bracket {
    int k;
    double h, s;
};

Bracket locate(const std::vector<double>& t, double x) {
    if (t.size() < 2 || x < t.front() || x > t.back())
        throw DomainError("trajectory: sample time outside the recorded span");
    auto it = std::upper_bound(t.begin(), t.end(), x);
    int k = static_cast<int>(it - t.begin()) - 1;
    k = std::clamp(k, 0, static_cast<int>(t.size()) - 2);
    const double h = t[k + 1] - t[k];
    return {k, h, (x - t[k]) / h};
}

}  // namespace

Vec Trajectory::sample_position(double t) const {
    const Bracket b = locate(times, t);
    const double s = b.s, s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * positions.col(b.k) + h10 * b.h * velocities.col(b.k) +
           h01 * positions.col(b.k + 1) + h11 * b.h * velocities.col(b.k + 1);
}

Vec Trajectory::sample_velocity(double t) const {
    const Bracket b = locate(times, t);
    const double s = b.s, s2 = s * s;
    const double d00 = (6 * s2 - 6 * s) / b.h, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / b.h, d11 = 3 * s2 - 2 * s;
    return d00 * positions.col(b.k) + d10 * velocities.col(b.k) +
           d01 * positions.col(b.k + 1) + d11 * velocities.col(b.k + 1);
}

double Trajectory::max_energy_drift() const {
    if (energy.empty()) return 0.0;
    double m = 0.0;
    for (double e : energy) m = std::max(m, std::abs(e - energy.front()));
    return m;
}

}  // namespace lowscat
