#include "miga/quadrature.hpp"

#include "miga/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace miga {

namespace {

QuadratureRule reference_rule(int n) {
    QuadratureRule r;
    r.points.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.points[i] = -x;
        r.points[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.points[n / 2] = 0.0;
    return r;
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw DomainError("gauss_legendre: need at least one point");
    static std::mutex mutex;
    static std::map<int, QuadratureRule> cache;
    QuadratureRule ref;
    {
        std::lock_guard lock(mutex);
        auto it = cache.find(n);
        if (it == cache.end()) it = cache.emplace(n, reference_rule(n)).first;
        ref = it->second;
    }
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < ref.points.size(); ++i) {
        ref.points[i] = mid + half * ref.points[i];
        ref.weights[i] *= half;
    }
    return ref;
}

QuadratureRule midpoint_rule(int m, double a, double b) {
    if (m < 1) throw DomainError("midpoint_rule: need at least one cell");
    QuadratureRule r;
    const double h = (b - a) / m;
    for (int k = 0; k < m; ++k) {
        r.points.push_back(a + (k + 0.5) * h);
        r.weights.push_back(h);
    }
    return r;
}

}  // namespace miga
