/**
 * @file patch.hpp
 * @brief Tensor-product NURBS patches: geometric map, Jacobians, elements and quadrature.
 *
 * Control points are stored row-wise with parametric direction 0 running fastest.
 * Sides of a patch are numbered 2*d + {0: lower, 1: upper} for direction d.
 */
#pragma once

#include "miga/spline.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace miga {

struct Element {
    int id = 0;
    std::array<int, 3> spans{0, 0, 0};
    std::array<double, 3> lower{0, 0, 0};
    std::array<double, 3> upper{0, 0, 0};
};

/// Quadrature point in parametric coordinates; `weight` excludes the geometric Jacobian.
struct QuadPoint {
    std::array<double, 3> xi{0, 0, 0};
    double weight = 0.0;
};

/// Basis data at one parametric point.
struct PointData {
    std::vector<std::size_t> indices;  ///< nonzero basis functions
    Eigen::VectorXd R;                 ///< values
    Eigen::MatrixXd dR_dxi;            ///< dim x nf
    Eigen::MatrixXd dR_dx;             ///< sdim x nf, only for dim == sdim
    Eigen::VectorXd x;                 ///< physical point
    Eigen::MatrixXd J;                 ///< sdim x dim, columns dx/dxi_l
    double detJ = 0.0;                 ///< only for dim == sdim
};

class Patch {
public:
    Patch() = default;
    /// `control_points` has one row per basis function and one column per physical coordinate.
    Patch(std::vector<SplineSpace> spaces, Eigen::MatrixXd control_points);

    /// Patch of given degrees and element counts whose map is the identity on a box.
    static Patch box(const std::vector<int>& degrees, const std::vector<int>& elements,
                     const std::vector<double>& lower, const std::vector<double>& upper);
    /// Identity map on the box spanned by open knot vectors (control points at the Greville abscissae).
    static Patch box(const std::vector<KnotVector>& knots);

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(spaces_.size()); }
    [[nodiscard]] int sdim() const noexcept { return static_cast<int>(cp_.cols()); }
    [[nodiscard]] const std::vector<SplineSpace>& spaces() const noexcept { return spaces_; }
    [[nodiscard]] const SplineSpace& space(int d) const { return spaces_[static_cast<std::size_t>(d)]; }
    [[nodiscard]] const Eigen::MatrixXd& control_points() const noexcept { return cp_; }
    [[nodiscard]] int num_basis() const noexcept { return static_cast<int>(cp_.rows()); }
    [[nodiscard]] int num_basis(int d) const { return space(d).num_basis(); }
    [[nodiscard]] std::array<int, 3> multi_index(int A) const;
    [[nodiscard]] int index(const std::array<int, 3>& ijk) const;
    [[nodiscard]] double diameter() const;

    [[nodiscard]] Eigen::VectorXd map_point(std::span<const double> xi) const;
    /// sdim x dim matrix of tangent columns; throws SingularMapError if square and det <= 0.
    [[nodiscard]] Eigen::MatrixXd jacobian(std::span<const double> xi) const;
    /// Basis values, parametric and (for square maps) physical first derivatives.
    [[nodiscard]] PointData evaluate(std::span<const double> xi, bool gradients = true) const;

    /// Newton inversion of the map from `guess`; throws InversionError on failure.
    [[nodiscard]] std::vector<double> invert_point(const Eigen::VectorXd& x, std::vector<double> guess) const;

    [[nodiscard]] std::vector<Element> elements() const;
    /// Tensor Gauss rule with n[d] points per direction.
    [[nodiscard]] std::vector<QuadPoint> quadrature(const Element& e, const std::array<int, 3>& n) const;
    /// Gauss rule with degree+1 points per direction.
    [[nodiscard]] std::vector<QuadPoint> quadrature(const Element& e) const;

    /// Control-point indices on a side, ordered by the remaining directions (lowest fastest).
    [[nodiscard]] std::vector<int> side_indices(int side) const;

private:
    std::vector<SplineSpace> spaces_;
    Eigen::MatrixXd cp_;
    std::array<int, 3> shape_{1, 1, 1};
};

/// Field gradient with respect to physical coordinates: ncomp x sdim.
/// `coeffs` holds one row per control point and one column per component.
[[nodiscard]] Eigen::MatrixXd physical_gradient(const Patch& patch, const Eigen::MatrixXd& coeffs,
                                                std::span<const double> xi);

/// Field value: one entry per component.
[[nodiscard]] Eigen::VectorXd field_value(const Patch& patch, const Eigen::MatrixXd& coeffs,
                                          std::span<const double> xi);

}  // namespace miga
