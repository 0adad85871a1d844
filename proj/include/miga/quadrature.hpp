#pragma once

#include <vector>

namespace miga {

/// One-dimensional rule: points and weights.
struct QuadratureRule {
    std::vector<double> points;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree 2n-1.
[[nodiscard]] QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Midpoint rule with m equal cells on [a, b].
[[nodiscard]] QuadratureRule midpoint_rule(int m, double a, double b);

}  // namespace miga
