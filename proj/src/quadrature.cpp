#include "lowscat/quadrature.hpp"

#include <numbers>

namespace lowscat {

namespace detail {

GaussRule make_gauss_legendre(int n) {
    GaussRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.x[i] = 0.5 * (1.0 - z);
        rule.x[n - 1 - i] = 0.5 * (1.0 + z);
        rule.w[i] = rule.w[n - 1 - i] = 0.5 * w;
    }
    return rule;
}

}  // namespace detail

const GaussRule& gauss_legendre(int n) {
    static const std::vector<GaussRule> cache = [] {
        std::vector<GaussRule> c(65);
        for (int k = 1; k <= 64; ++k) c[k] = detail::make_gauss_legendre(k);
        return c;
    }();
    if (n < 1 || n > 64) throw DomainError("gauss_legendre: order must be in [1,64]");
    return cache[n];
}

}  // namespace lowscat
