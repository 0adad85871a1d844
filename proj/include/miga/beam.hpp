/**
 * @file beam.hpp
 * @brief Geometrically exact rods discretized by isogeometric collocation.
 *
 * Centerline, quaternion, force and moment fields live in one spline space on [0, L] and are
 * collocated at its Greville points. Quaternions are stored as (v1, v2, v3, q4) with scalar part last.
 */
#pragma once

#include "miga/newton.hpp"
#include "miga/spline.hpp"

#include <Eigen/Dense>

#include <vector>

namespace miga {

struct BeamSection {
    double young_modulus = 1.0;
    double poisson_ratio = 0.0;
    double radius = 1.0;

    void validate() const;
    [[nodiscard]] double shear_modulus() const { return young_modulus / (2 * (1 + poisson_ratio)); }
    [[nodiscard]] double area() const;
    [[nodiscard]] double second_moment() const;
    [[nodiscard]] double polar_moment() const;
    [[nodiscard]] double circumference() const;
    /// diag(GA, GA, EA)
    [[nodiscard]] Eigen::Vector3d K1() const;
    /// diag(EI, EI, GJ)
    [[nodiscard]] Eigen::Vector3d K2() const;
};

/// Rotation of a unit quaternion (normalized internally); throws DomainError for |q| < 1e-12.
[[nodiscard]] Eigen::Matrix3d quat_to_rotation(const Eigen::Vector4d& q);
/// Hamilton product a * b, so that R(a * b) = R(a) R(b).
[[nodiscard]] Eigen::Vector4d quat_multiply(const Eigen::Vector4d& a, const Eigen::Vector4d& b);
[[nodiscard]] Eigen::Vector4d quat_from_axis_angle(const Eigen::Vector3d& axis, double angle);
/// Rotation angle 2 atan2(|v|, q4) in [0, 2 pi]; the sign of q4 keeps angles beyond pi along a continuous field.
[[nodiscard]] double quat_angle(const Eigen::Vector4d& q);

/// Field values and arclength derivatives at one point, packed as
/// phi(3) phi'(3) q(4) q'(4) n(3) n'(3) m(3) m'(3).
using PointVariables = Eigen::Matrix<double, 26, 1>;

namespace pv {
inline constexpr int phi = 0;
inline constexpr int dphi = 3;
inline constexpr int q = 6;
inline constexpr int dq = 10;
inline constexpr int n = 14;
inline constexpr int dn = 17;
inline constexpr int m = 20;
inline constexpr int dm = 23;
}  // namespace pv

/// Rows of the pointwise kernel.
namespace kr {
inline constexpr int constitutive_n = 0;  ///< n - Lam K1 (Lam^T phi' - e3)
inline constexpr int constitutive_m = 3;  ///< m - Lam K2 kappa
inline constexpr int unit = 6;            ///< q.q - 1
inline constexpr int force_balance = 7;   ///< n'
inline constexpr int moment_balance = 10; ///< m' + phi' x n
inline constexpr int gauge = 13;          ///< d1 . D2
inline constexpr int count = 14;
}  // namespace kr

struct KernelResult {
    Eigen::Matrix<double, kr::count, 1> rows;
    Eigen::Matrix<double, kr::count, 26> dz;
};

/// Pointwise residual rows and their exact derivatives (automatic differentiation).
/// `triad` holds the reference directors D1, D2, D3 as columns; Lam = R(q) triad.
[[nodiscard]] KernelResult beam_kernel(const BeamSection& section, const Eigen::Matrix3d& triad, const PointVariables& z);

struct BeamStrains {
    Eigen::Vector3d eps;    ///< Lam^T phi' - e3
    Eigen::Vector3d kappa;  ///< axl of the skew part of Lam^T Lam'
    double symmetric_residue = 0.0;  ///< norm of the symmetric part of Lam^T Lam'
};
[[nodiscard]] BeamStrains beam_strains(const Eigen::Matrix3d& triad, const PointVariables& z);

/// Coefficient arrays, one row per basis function.
struct BeamCoefficients {
    Eigen::MatrixXd phi;  ///< n x 3
    Eigen::MatrixXd q;    ///< n x 4
    Eigen::MatrixXd n;    ///< n x 3
    Eigen::MatrixXd m;    ///< n x 3
};

/// Nonzero basis functions at a collocation point.
struct PointBasis {
    double s = 0.0;
    int first = 0;       ///< index of the first nonzero function
    Eigen::VectorXd N0;  ///< values
    Eigen::VectorXd N1;  ///< arclength derivatives
};

class BeamModel {
public:
    BeamModel() = default;
    /// Straight reference beam X(s) = X0 + s D3 on the knot vector domain [0, L].
    BeamModel(KnotVector knots, BeamSection section, Eigen::Vector3d origin,
              Eigen::Matrix3d triad = Eigen::Matrix3d::Identity());

    [[nodiscard]] const KnotVector& knots() const noexcept { return kv_; }
    [[nodiscard]] const BeamSection& section() const noexcept { return section_; }
    [[nodiscard]] const Eigen::Matrix3d& triad() const noexcept { return triad_; }
    [[nodiscard]] const Eigen::Vector3d& origin() const noexcept { return origin_; }
    [[nodiscard]] double length() const { return kv_.upper() - kv_.lower(); }
    [[nodiscard]] int num_basis() const { return kv_.num_basis(); }
    [[nodiscard]] const std::vector<PointBasis>& points() const noexcept { return points_; }
    [[nodiscard]] Eigen::Vector3d reference_position(double s) const;

    /// Reference state: straight centerline, identity quaternion, zero forces and moments.
    [[nodiscard]] BeamCoefficients reference_state() const;
    [[nodiscard]] PointVariables variables(const BeamCoefficients& c, const PointBasis& b) const;
    /// Variables at an arbitrary arclength.
    [[nodiscard]] PointVariables variables_at(const BeamCoefficients& c, double s) const;
    [[nodiscard]] PointBasis basis_at(double s) const;

    /// Interpolation matrix at the collocation points (square, invertible).
    [[nodiscard]] const Eigen::MatrixXd& collocation() const noexcept { return colloc_; }

private:
    KnotVector kv_;
    BeamSection section_;
    Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
    Eigen::Matrix3d triad_ = Eigen::Matrix3d::Identity();
    std::vector<PointBasis> points_;
    Eigen::MatrixXd colloc_;
};

/// Cantilever clamped at s = 0 with end force F and end moment M at s = L (scaled by the load factor).
/// Unknown layout: phi, q, n, m coefficient blocks, node-major inside each block.
class CantileverProblem : public NonlinearSystem {
public:
    CantileverProblem(BeamModel model, Eigen::Vector3d end_force, Eigen::Vector3d end_moment);

    [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& x) override;
    [[nodiscard]] SpMat jacobian(const Eigen::VectorXd& x) override;
    void set_load_factor(double f) override { load_ = f; }
    [[nodiscard]] bool residual_is_merit() const override { return false; }

    [[nodiscard]] const BeamModel& model() const noexcept { return model_; }
    [[nodiscard]] int num_unknowns() const { return 13 * model_.num_basis(); }
    [[nodiscard]] Eigen::VectorXd pack(const BeamCoefficients& c) const;
    [[nodiscard]] BeamCoefficients unpack(const Eigen::VectorXd& x) const;

private:
    void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* r, Triplets* jac) const;

    BeamModel model_;
    Eigen::Vector3d force_;
    Eigen::Vector3d moment_;
    double load_ = 1.0;
};

/// Adds d(rows)/d(coefficients) of one field to a triplet list.
/// `dval` and `dder` are rows x dim derivatives with respect to the field value and its derivative.
void scatter_field(Triplets& out, int row0, const Eigen::MatrixXd& dval, const Eigen::MatrixXd& dder,
                   const PointBasis& b, int column_offset, int dim);

struct CantileverResult {
    BeamCoefficients state;
    SolveReport report;
    double tip_rotation = 0.0;        ///< rotation angle at s = L
    Eigen::Vector3d tip_position;     ///< phi(L)
    double max_unit_violation = 0.0;  ///< max | |q(s_k)| - 1 |
};

[[nodiscard]] CantileverResult solve_cantilever(const BeamModel& model, const Eigen::Vector3d& end_force,
                                                const Eigen::Vector3d& end_moment, const NewtonConfig& config);

}  // namespace miga
