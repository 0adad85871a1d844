/**
 * @file dual_basis.hpp
 * @brief Lagrange-multiplier bases on 1D interface trace spaces.
 *
 * Every basis here is elementwise polynomial of the trace degree p. On each element it is
 * stored as coefficients with respect to the p+1 B-splines of the trace knot vector that
 * are active on that element, so primal traces and multipliers share one evaluation path.
 */
#pragma once

#include "miga/spline.hpp"

#include <Eigen/Dense>

#include <vector>

namespace miga {

enum class DualStage { Elementwise, Glued, Optimal };
enum class End { Left, Right };

class PiecewiseBasis {
public:
    struct Piece {
        int span = 0;                ///< knot span of the element
        std::vector<int> functions;  ///< basis functions nonzero on the element
        Eigen::MatrixXd coeffs;      ///< functions.size() x (p+1), local B-spline coefficients
    };

    PiecewiseBasis() = default;
    PiecewiseBasis(KnotVector trace, int size, std::vector<Piece> pieces);

    [[nodiscard]] const KnotVector& trace() const noexcept { return trace_; }
    [[nodiscard]] int size() const noexcept { return size_; }
    [[nodiscard]] int degree() const noexcept { return trace_.degree(); }
    [[nodiscard]] const std::vector<Piece>& pieces() const noexcept { return pieces_; }

    /// Element index containing xi (right-closed last element).
    [[nodiscard]] int element_of(double xi) const;
    /// Values of all functions at xi (dense, length size()).
    [[nodiscard]] Eigen::VectorXd eval(double xi) const;
    /// Values of the functions nonzero on element `e` at xi, ordered as pieces()[e].functions.
    [[nodiscard]] Eigen::VectorXd eval_on(int e, double xi) const;
    /// Element indices on which function i does not vanish identically.
    [[nodiscard]] std::vector<int> support(int i) const;

    /// New basis with functions sum_k T(i, k) * old_k.
    [[nodiscard]] PiecewiseBasis transformed(const Eigen::MatrixXd& T) const;

    /// Per-element monomial coefficients of function i in the local coordinate t in [0, 1].
    [[nodiscard]] Eigen::VectorXd monomial_coefficients(int e, int i) const;

private:
    KnotVector trace_;
    int size_ = 0;
    std::vector<Piece> pieces_;
};

struct DualBasis {
    PiecewiseBasis basis;
    DualStage stage = DualStage::Glued;
};

/// The trace B-splines themselves.
[[nodiscard]] PiecewiseBasis standard_basis(const KnotVector& trace);

/// Step I: per element, biorthogonal to the local B-splines. Function e*(p+1)+k belongs to element e.
[[nodiscard]] DualBasis step1_elementwise_dual(const KnotVector& trace);
/// Step II: one dual function per trace function, supported where the trace function is.
[[nodiscard]] DualBasis step2_glue(const DualBasis& elementwise, const KnotVector& trace);
/// Step III: adds trace-orthogonal corrections so that the dual span reproduces polynomials of degree p.
[[nodiscard]] DualBasis step3_optimal(const DualBasis& glued, const KnotVector& trace);
/// Runs the steps up to `stage`.
[[nodiscard]] DualBasis make_dual_basis(const KnotVector& trace, DualStage stage);

/// Matrix [integral a_i b_j] over the trace parameter domain.
[[nodiscard]] Eigen::MatrixXd coupling_matrix(const PiecewiseBasis& a, const PiecewiseBasis& b);

/// Integral of each function of `b` over the trace parameter domain.
[[nodiscard]] Eigen::VectorXd integrals(const PiecewiseBasis& b);

struct CrosspointModification {
    int p = 0;
    int l = 0;
    Eigen::MatrixXd C;  ///< p x l
};

/// Coefficients making the reduced standard multiplier space reproduce polynomials of degree p-1
/// at an end of an open uniform knot vector.
[[nodiscard]] CrosspointModification crosspoint_matrix(int p, int l);

/// Same construction for a dual basis on a concrete trace, with the dual coefficient functionals
/// f -> integral(f phi_j) / integral(phi_j) in place of B-spline coefficients.
[[nodiscard]] CrosspointModification dual_crosspoint_matrix(const PiecewiseBasis& dual, int l, End end);

/// Removes l functions at one end and replaces the next p by sum_j C_ij R_j + R_{i+l}.
[[nodiscard]] PiecewiseBasis apply_crosspoint_modification(const PiecewiseBasis& basis,
                                                           const CrosspointModification& cm, End end);

}  // namespace miga
