/**
 * @file spline.hpp
 * @brief Univariate and tensor-product B-spline / NURBS bases.
 *
 * Conventions
 * - Knot vectors carry their degree; the evaluation domain is [t_p, t_n], which
 *   for open (clamped) vectors equals [first knot, last knot].
 * - Spans are half-open [t_i, t_{i+1}) except the last nonzero span, which is
 *   closed on the right so that the clamped end point is evaluable.
 * - Local evaluations return the p+1 functions N_{span-p} .. N_{span}.
 * - Multivariate functions are numbered with direction 0 running fastest.
 */
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace miga {

class KnotVector {
public:
    KnotVector() = default;

    /// Throws InvariantError for decreasing knots, multiplicity > p+1 or too few knots.
    KnotVector(std::vector<double> knots, int degree);

    /// Open knot vector on [a, b] with `elements` equal spans.
    static KnotVector open_uniform(int degree, int elements, double a = 0.0, double b = 1.0);

    [[nodiscard]] int degree() const noexcept { return degree_; }
    [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }
    [[nodiscard]] double operator[](std::size_t i) const { return knots_[i]; }
    [[nodiscard]] int num_basis() const noexcept {
        return static_cast<int>(knots_.size()) - degree_ - 1;
    }
    [[nodiscard]] double lower() const { return knots_[degree_]; }
    [[nodiscard]] double upper() const { return knots_[num_basis()]; }
    [[nodiscard]] bool is_open() const;

    /// Distinct knot values inside [lower, upper], ascending.
    [[nodiscard]] std::vector<double> breakpoints() const;
    /// Span indices i with t_i < t_{i+1} inside the domain (one per element).
    [[nodiscard]] std::vector<int> element_spans() const;
    [[nodiscard]] int num_elements() const { return static_cast<int>(element_spans().size()); }

    /// Knot vector with the given values inserted (kept sorted).
    [[nodiscard]] KnotVector with_inserted(const std::vector<double>& values) const;
    /// Bisects every element `levels` times.
    [[nodiscard]] KnotVector refined_uniform(int levels = 1) const;

    friend bool operator==(const KnotVector&, const KnotVector&) = default;

private:
    std::vector<double> knots_;
    int degree_ = 0;
};

/// Knot vector plus one positive weight per basis function (all ones for polynomial splines).
class SplineSpace {
public:
    SplineSpace() = default;
    explicit SplineSpace(KnotVector kv);
    SplineSpace(KnotVector kv, Eigen::VectorXd weights);

    [[nodiscard]] const KnotVector& knots() const noexcept { return kv_; }
    [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }
    [[nodiscard]] int degree() const noexcept { return kv_.degree(); }
    [[nodiscard]] int num_basis() const noexcept { return kv_.num_basis(); }
    [[nodiscard]] bool is_rational() const noexcept { return rational_; }

private:
    KnotVector kv_;
    Eigen::VectorXd weights_;
    bool rational_ = false;
};

[[nodiscard]] int find_span(const KnotVector& kv, double xi);

/// Values of the p+1 nonzero B-splines at xi.
[[nodiscard]] Eigen::VectorXd eval_basis(const KnotVector& kv, double xi);

/// Row r holds the r-th derivatives of the p+1 nonzero B-splines, r = 0..k.
[[nodiscard]] Eigen::MatrixXd eval_basis_derivs(const KnotVector& kv, double xi, int k);
[[nodiscard]] Eigen::MatrixXd eval_basis_derivs(const KnotVector& kv, int span, double xi, int k);

/// Rational counterpart of eval_basis_derivs; identical output when all weights are one.
[[nodiscard]] Eigen::MatrixXd nurbs_eval(const SplineSpace& space, double xi, int k);

/// Knot averages, one per basis function.
[[nodiscard]] std::vector<double> greville(const KnotVector& kv);

/// Dense matrix [N_j(points_i)].
[[nodiscard]] Eigen::MatrixXd collocation_matrix(const KnotVector& kv, std::span<const double> points);

/// Row i expresses coarse B-spline i in the fine basis: B_i = sum_j S_ij B^fine_j.
/// Requires the fine knot vector to contain the coarse one (Oslo algorithm).
[[nodiscard]] Eigen::MatrixXd knot_insertion_matrix(const KnotVector& coarse, const KnotVector& fine);

struct SubdivisionMatrix {
    KnotVector coarse;
    KnotVector fine;
    Eigen::MatrixXd entries;  ///< coarse x fine
};

/// One-level dyadic subdivision of a uniform open knot vector. Interior rows follow the
/// 2^-p binom(p+1, j) mask; rows touching the repeated end knots come from knot insertion.
[[nodiscard]] SubdivisionMatrix subdivide(const KnotVector& kv);

/// Derivative multi-index (orders per parametric direction).
using MultiIndex = std::array<int, 3>;

/// All multi-indices in `dim` directions with total order <= k, sorted by total order.
[[nodiscard]] std::vector<MultiIndex> derivative_multi_indices(int dim, int k);

struct TensorBasis {
    int dim = 0;
    std::vector<MultiIndex> orders;   ///< row labels of `values`
    std::vector<std::size_t> indices; ///< flattened global indices of the nonzero functions
    Eigen::MatrixXd values;           ///< orders.size() x indices.size()

    /// Row of `values` for the given derivative orders; throws DomainError when absent.
    [[nodiscard]] int row(const MultiIndex& alpha) const;
};

/// Nonzero multivariate (rational) basis functions and their partial derivatives up to total order k.
[[nodiscard]] TensorBasis tensor_basis(std::span<const SplineSpace> spaces, std::span<const double> xi, int k);

/// Applies the multivariate quotient rule in place: on entry `ders` holds derivatives of the
/// polynomial products B^A, on exit of R^A = w_A B^A / sum_B w_B B^B. Rows follow `orders`.
void rationalize(Eigen::MatrixXd& ders, const std::vector<MultiIndex>& orders,
                 const Eigen::Ref<const Eigen::VectorXd>& weights);

}  // namespace miga
