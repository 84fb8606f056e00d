#include "lowscat/ode.hpp"

#include <algorithm>
#include <cmath>

namespace lowscat {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double err_norm(const Vec& err, const Vec& y, const Vec& yn, const OdeOptions& o) {
    const Eigen::ArrayXd sc = o.atol + o.rtol * y.array().abs().max(yn.array().abs());
    return std::sqrt((err.array() / sc).square().mean());
}

}  // namespace

OdeStats dopri5(const OdeRhs& f, double t0, Vec y, double t1, const OdeOptions& opt,
                const OdeObserver& obs, const std::vector<double>& stops) {
    OdeStats st;
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    const int n = static_cast<int>(y.size());
    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), yn(n), err(n);
    double t = t0;
    f(t, y, k1);
    if (obs && !obs(t, y, k1)) {
        st.t_end = t;
        return st;
    }
    if (t0 == t1) return st;

    double h = opt.h0;
    if (h <= 0.0) {
        const Eigen::ArrayXd sc = opt.atol + opt.rtol * y.array().abs();
        const double d0 = std::sqrt((y.array() / sc).square().mean());
        const double d1 = std::sqrt((k1.array() / sc).square().mean());
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, std::abs(t1 - t0));
        yt = y + dir * h0 * k1;
        f(t + dir * h0, yt, k2);
        const double d2 = std::sqrt(((k2 - k1).array() / sc).square().mean()) / h0;
        const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                    : std::pow(0.01 / std::max(d1, d2), 0.2);
        h = std::min(100.0 * h0, h1);
    }
    h = std::min(h, std::abs(t1 - t0));

    size_t next_stop = 0;
    while (next_stop < stops.size() && dir * (stops[next_stop] - t) <= 0.0) ++next_stop;

    double err_prev = 1e-4;
    while (dir * (t1 - t) > 0.0) {
        if (st.accepted + st.rejected >= opt.max_steps)
            throw ConvergenceError("dopri5: step budget exhausted");
        double target = t1;
        if (next_stop < stops.size() && dir * (stops[next_stop] - t1) < 0.0) target = stops[next_stop];
        bool land = false;
        double hs = h;
        if (hs >= std::abs(target - t) * (1.0 - 1e-12)) {
            hs = std::abs(target - t);
            land = true;
        }
        const double hh = dir * hs;
        yt = y + hh * a21 * k1;
        f(t + c2 * hh, yt, k2);
        yt = y + hh * (a31 * k1 + a32 * k2);
        f(t + c3 * hh, yt, k3);
        yt = y + hh * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * hh, yt, k4);
        yt = y + hh * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * hh, yt, k5);
        yt = y + hh * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        f(t + hh, yt, k6);
        yn = y + hh * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const double tn = land ? target : t + hh;
        f(tn, yn, k7);
        err = hh * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = err_norm(err, y, yn, opt);
        if (!std::isfinite(en)) {
            h = 0.25 * hs;
            ++st.rejected;
            continue;
        }
        if (en <= 1.0) {
            ++st.accepted;
            t = tn;
            y = yn;
            k1 = k7;
            if (land && next_stop < stops.size() && t == stops[next_stop]) ++next_stop;
            // PI controller
            double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.7 / 5) * std::pow(err_prev, 0.4 / 5);
            fac = std::clamp(fac, 0.2, 5.0);
            err_prev = std::max(en, 1e-4);
            // a step shortened to land on a stop should not shrink the next one
            h = (land ? std::max(hs, h) : hs) * fac;
            if (obs && !obs(t, y, k1)) break;
        } else {
            ++st.rejected;
            h = hs * std::max(0.2, 0.9 * std::pow(en, -0.2));
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw ConvergenceError("dopri5: step size underflow at t = " + std::to_string(t));
    }
    st.t_end = t;
    return st;
}

}  // namespace lowscat
