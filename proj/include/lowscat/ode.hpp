#pragma once

#include <functional>

#include "lowscat/types.hpp"

namespace lowscat {

struct OdeOptions {
    double rtol = 1e-12;
    double atol = 1e-12;
    double h0 = 0.0;  // 0 = automatic
    long max_steps = 10'000'000;
};

using OdeRhs = std::function<void(double t, const Vec& y, Vec& dy)>;
/// Called at the start point and after every accepted step; return false to stop.
using OdeObserver = std::function<bool(double t, const Vec& y, const Vec& dy)>;

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    double t_end = 0.0;
};

/// Dormand–Prince 5(4) with FSAL. Steps are shortened to land exactly on each
/// of `stops` (sorted in the integration direction) and on t1.
OdeStats dopri5(const OdeRhs& f, double t0, Vec y0, double t1, const OdeOptions& opt,
                const OdeObserver& obs, const std::vector<double>& stops = {});

}  // namespace lowscat
