#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "lowscat/types.hpp"

namespace lowscat {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int evals = 0;
};

struct GaussRule {
    std::vector<double> x;  // nodes on [0,1]
    std::vector<double> w;
};

namespace detail {

inline constexpr std::array<double, 8> gk_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> gk_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

GaussRule make_gauss_legendre(int n);

}  // namespace detail

/// Gauss-Legendre rule with n nodes mapped to [0,1]; cached for n <= 64.
const GaussRule& gauss_legendre(int n);

/// One 15-point Kronrod panel. Error is the QUADPACK-scaled |K - G| estimate.
template <typename F>
QuadResult gauss_kronrod15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double k = fc * detail::gk_wk[7];
    double g = fc * detail::gk_wg[3];
    double fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * detail::gk_x[j];
        fv1[j] = f(c - dx);
        fv2[j] = f(c + dx);
        k += detail::gk_wk[j] * (fv1[j] + fv2[j]);
        if (j % 2 == 1) g += detail::gk_wg[j / 2] * (fv1[j] + fv2[j]);
    }
    const double kmean = 0.5 * k;
    double asc = detail::gk_wk[7] * std::abs(fc - kmean);
    for (int j = 0; j < 7; ++j)
        asc += detail::gk_wk[j] * (std::abs(fv1[j] - kmean) + std::abs(fv2[j] - kmean));
    asc *= std::abs(h);
    double err = std::abs((k - g) * h);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    return {k * h, err, 15};
}

/// Globally adaptive Gauss-Kronrod on [a,b]. Throws ConvergenceError when the
/// interval budget runs out before reaching max(abs_tol, rel_tol*|I|).
/// `breaks` (optional) receives the final panel endpoints in increasing order.
template <typename F>
QuadResult integrate(F&& f, double a, double b, double rel_tol = 1e-12, double abs_tol = 0.0,
                     int max_intervals = 4000, std::vector<double>* breaks = nullptr) {
    if (a == b) return {};
    struct Piece {
        double a, b;
        QuadResult q;
        bool operator<(const Piece& o) const { return q.error < o.q.error; }
    };
    std::priority_queue<Piece> heap;
    QuadResult first = gauss_kronrod15(f, a, b);
    heap.push({a, b, first});
    double total = first.value, err = first.error;
    int evals = first.evals;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    while (true) {
        const double tol = std::max(abs_tol, rel_tol * std::abs(total));
        if (err <= tol) break;
        if (static_cast<int>(heap.size()) >= max_intervals) {
            // accept if what is left is roundoff
            if (err <= std::max(tol, 1e3 * eps * std::abs(total))) break;
            throw ConvergenceError("adaptive quadrature: interval budget exhausted (err " +
                                   std::to_string(err) + ")");
        }
        Piece p = heap.top();
        heap.pop();
        const double m = 0.5 * (p.a + p.b);
        if (m <= std::min(p.a, p.b) || m >= std::max(p.a, p.b)) {
            heap.push(p);
            if (err <= std::max(tol, 1e3 * eps * std::abs(total))) break;
            throw ConvergenceError("adaptive quadrature: interval too small");
        }
        QuadResult l = gauss_kronrod15(f, p.a, m);
        QuadResult r = gauss_kronrod15(f, m, p.b);
        evals += 30;
        total += l.value + r.value - p.q.value;
        err += l.error + r.error - p.q.error;
        heap.push({p.a, m, l});
        heap.push({m, p.b, r});
    }
    // re-sum to drop accumulated cancellation in the running total
    double sum = 0.0, esum = 0.0;
    if (breaks) breaks->clear();
    while (!heap.empty()) {
        sum += heap.top().q.value;
        esum += heap.top().q.error;
        if (breaks) breaks->push_back(heap.top().a);
        heap.pop();
    }
    if (breaks) {
        breaks->push_back(b);
        std::sort(breaks->begin(), breaks->end());
        if (a > b) std::reverse(breaks->begin(), breaks->end());
    }
    return {sum, esum, evals};
}

/// Gauss-Kronrod 15 on the fixed panels breaks[i]..breaks[i+1].
template <typename F>
double integrate_panels(F&& f, const std::vector<double>& breaks) {
    double s = 0.0;
    for (size_t i = 0; i + 1 < breaks.size(); ++i)
        s += gauss_kronrod15(f, breaks[i], breaks[i + 1]).value;
    return s;
}

/// ∫_a^b f with an integrable (x-a)^{-1/2} singularity at a: x = a + u².
template <typename F>
QuadResult integrate_sqrt_left(F&& f, double a, double b, double rel_tol = 1e-12,
                               double abs_tol = 0.0) {
    auto g = [&](double u) { return 2.0 * u * f(a + u * u); };
    return integrate(g, 0.0, std::sqrt(b - a), rel_tol, abs_tol);
}

/// ∫_a^∞ f(x) dx via x = a w^{-p}, w in (0,1]. Choose p so that
/// f(x) x^{1+1/p} stays bounded as x → ∞.
template <typename F>
QuadResult integrate_tail(F&& f, double a, double p, double rel_tol = 1e-12,
                          double abs_tol = 0.0) {
    auto g = [&](double w) {
        if (w <= 0.0) return 0.0;
        const double x = a * std::pow(w, -p);
        const double v = f(x);
        if (v == 0.0) return 0.0;
        return v * a * p * std::pow(w, -p - 1.0);
    };
    return integrate(g, 0.0, 1.0, rel_tol, abs_tol);
}

/// Composite Gauss-Legendre with fixed nodes; smooth in parameters of f.
template <typename F>
double integrate_fixed(F&& f, double a, double b, int panels, int order) {
    const GaussRule& rule = gauss_legendre(order);
    const double h = (b - a) / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a0 = a + p * h;
        for (int i = 0; i < order; ++i) s += rule.w[i] * f(a0 + h * rule.x[i]);
    }
    return s * h;
}

}  // namespace lowscat
