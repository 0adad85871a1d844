/**
 * @file embedded.hpp
 * @brief Reduced 1D-3D coupling of a collocated rod embedded in a continuum patch.
 *
 * The rod centerline is tied to the matrix deformation at the collocation points,
 * phi(s_k) = x(X_c(s_k)), and the rod's distributed force is returned to the matrix as point
 * loads at the same points. Two formulations share one set of rows:
 *  - EmbeddedProblem eliminates the multipliers and the centerline coefficients and solves
 *    with a Schur complement on a Cholesky factor of the matrix tangent;
 *  - FullEmbeddedProblem keeps (u, phi, q, n, m, lambda) and solves the saddle system by sparse LU.
 */
#pragma once

#include "miga/beam.hpp"
#include "miga/continuum.hpp"
#include "miga/newton.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace miga {

/// Rod collocation points located in one matrix patch.
class FiberEmbedding {
public:
    FiberEmbedding() = default;
    /// Locates every collocation point of `beam` in `patch` of `matrix`; throws EmbeddingError when a
    /// point lies outside the patch and ConfigurationError for a nonzero spring compliance.
    FiberEmbedding(const ContinuumModel& matrix, int patch, BeamModel beam, double spring_compliance = 0.0);

    [[nodiscard]] const BeamModel& beam() const noexcept { return beam_; }
    [[nodiscard]] int patch() const noexcept { return patch_; }
    [[nodiscard]] int num_points() const { return static_cast<int>(centerline_.size()); }
    [[nodiscard]] int num_matrix_dofs() const noexcept { return ndof_; }
    /// Reference centerline X_c(s_k).
    [[nodiscard]] const std::vector<Eigen::Vector3d>& centerline() const noexcept { return centerline_; }
    /// Parametric coordinates of X_c(s_k) in the host patch.
    [[nodiscard]] const std::vector<std::array<double, 3>>& parametric() const noexcept { return xi_; }

    /// Point evaluation of the matrix displacement: (E u)_{3k+c} = u_c(X_c(s_k)).
    [[nodiscard]] const SpMat& evaluation() const noexcept { return E_; }
    /// Inverse of the rod collocation matrix: coefficients = P * point values.
    [[nodiscard]] const Eigen::MatrixXd& interpolation() const noexcept { return P_; }
    /// Integrals of the cardinal splines interpolating at the collocation points.
    [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return w_; }
    /// lambda = Lambda * n-coefficients (both stacked 3k+c): point forces exerted by the matrix on the rod,
    /// -w_k n'(s_k) plus -n(0) and +n(L) at the ends.
    [[nodiscard]] const Eigen::MatrixXd& load_operator() const noexcept { return Lambda_; }
    /// Columns of E with nonzero entries (sorted).
    [[nodiscard]] const std::vector<int>& coupled_dofs() const noexcept { return coupled_; }

    /// Deformed positions x(X_c(s_k)) stacked 3k+c.
    [[nodiscard]] Eigen::VectorXd matrix_positions(const Eigen::VectorXd& u) const;
    /// Matrix nodal forces E^T lambda of point forces lambda acting at X_c(s_k).
    [[nodiscard]] Eigen::VectorXd transfer_loads(const Eigen::VectorXd& lambda) const;
    /// Rows phi(s_k) - x(X_c(s_k)) stacked 3k+c.
    [[nodiscard]] Eigen::VectorXd coupling_constraints(const Eigen::VectorXd& u, const Eigen::MatrixXd& phi) const;
    /// Centerline coefficients interpolating x(X_c(s_k)).
    [[nodiscard]] Eigen::MatrixXd centerline_coefficients(const Eigen::VectorXd& u) const;

private:
    BeamModel beam_;
    int patch_ = 0;
    int ndof_ = 0;
    std::vector<Eigen::Vector3d> centerline_;
    std::vector<std::array<double, 3>> xi_;
    SpMat E_;
    Eigen::MatrixXd P_;
    Eigen::VectorXd w_;
    Eigen::MatrixXd Lambda_;
    std::vector<int> coupled_;
};

/// Rod rows shared by both formulations, 10 per collocation point:
/// moment row (m(0) = 0, interior m' + phi' x n = 0, m(L) = M + (0, 0, d1 . D2)), constitutive n, m, unit.
struct FiberRows {
    Eigen::VectorXd r;       ///< 10 n_b
    Eigen::MatrixXd d_phi;   ///< 10 n_b x 3 n_b
    SpMat d_rest;            ///< 10 n_b x 10 n_b, columns q (4 n_b), n (3 n_b), m (3 n_b)
};
[[nodiscard]] FiberRows fiber_rows(const BeamModel& beam, const BeamCoefficients& c, const Eigen::Vector3d& tip_moment,
                                   bool jacobian);

/// Condensed unknowns: matrix displacement (all dofs, prescribed ones frozen), then q, n, m coefficients.
class EmbeddedProblem : public NonlinearSystem {
public:
    EmbeddedProblem(const ContinuumModel& matrix, DirichletSet dirichlet, FiberEmbedding fiber,
                    Eigen::Vector3d tip_moment, Eigen::VectorXd matrix_load = {});

    [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& x) override;
    [[nodiscard]] SpMat jacobian(const Eigen::VectorXd& x) override;
    /// Schur complement on the rod block; sparse LU of the full Jacobian when disabled.
    [[nodiscard]] Eigen::VectorXd solve_step(const Eigen::VectorXd& x, const Eigen::VectorXd& r) override;
    void set_load_factor(double f) override { load_ = f; }
    [[nodiscard]] bool residual_is_merit() const override { return false; }

    void use_schur_complement(bool on) { schur_ = on; }
    [[nodiscard]] int num_unknowns() const { return ndof_ + 10 * nb_; }
    [[nodiscard]] const FiberEmbedding& fiber() const noexcept { return fiber_; }
    [[nodiscard]] const DirichletSet& dirichlet() const noexcept { return dirichlet_; }
    [[nodiscard]] Eigen::VectorXd initial_state() const;
    [[nodiscard]] Eigen::VectorXd displacement(const Eigen::VectorXd& x) const { return x.head(ndof_); }
    [[nodiscard]] BeamCoefficients rod(const Eigen::VectorXd& x) const;
    /// Point forces on the rod.
    [[nodiscard]] Eigen::VectorXd multipliers(const Eigen::VectorXd& x) const;

private:
    struct Linearization {
        SpMat K;
        FiberRows rows;
        Eigen::MatrixXd H;  ///< d(rod rows)/d(point positions)
    };
    Linearization linearize(const Eigen::VectorXd& x) const;

    const ContinuumModel* matrix_;
    DirichletSet dirichlet_;
    FiberEmbedding fiber_;
    Eigen::Vector3d moment_;
    Eigen::VectorXd fext_;
    SpMat E_free_;
    int ndof_ = 0;
    int nb_ = 0;
    double load_ = 1.0;
    bool schur_ = true;
    CholeskySolver chol_;
};

/// Unreduced unknowns: u, phi (3 n_b), q (4 n_b), n (3 n_b), m (3 n_b), lambda (3 n_b).
class FullEmbeddedProblem : public NonlinearSystem {
public:
    FullEmbeddedProblem(const ContinuumModel& matrix, DirichletSet dirichlet, FiberEmbedding fiber,
                        Eigen::Vector3d tip_moment, Eigen::VectorXd matrix_load = {});

    [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& x) override;
    [[nodiscard]] SpMat jacobian(const Eigen::VectorXd& x) override;
    void set_load_factor(double f) override { load_ = f; }
    [[nodiscard]] bool residual_is_merit() const override { return false; }

    [[nodiscard]] int num_unknowns() const { return ndof_ + 16 * nb_; }
    [[nodiscard]] Eigen::VectorXd initial_state() const;
    /// (u, q, n, m) in the layout of EmbeddedProblem.
    [[nodiscard]] Eigen::VectorXd condensed(const Eigen::VectorXd& x) const;
    [[nodiscard]] BeamCoefficients rod(const Eigen::VectorXd& x) const;

private:
    const ContinuumModel* matrix_;
    DirichletSet dirichlet_;
    FiberEmbedding fiber_;
    Eigen::Vector3d moment_;
    Eigen::VectorXd fext_;
    SpMat E_free_;
    int ndof_ = 0;
    int nb_ = 0;
    double load_ = 1.0;
};

/// Straight fiber along the axis of a clamped block [0, w]^2 x [0, L] loaded by a tip moment.
struct EmbeddedBeamConfig {
    double length = 5.0;
    double width = 1.0;
    double radius = 0.125;
    double fiber_young = 4346.0;
    double matrix_young = 10.0;
    double poisson_ratio = 0.0;        ///< matrix
    double fiber_poisson_ratio = 0.0;
    Eigen::Vector3d tip_moment{-0.025, 0.0, 0.0};
    int elements_xy = 3;  ///< n; the axial direction gets 5n elements for L = 5 w
    int degree_xy = 2;
    int degree_z = 4;     ///< also the rod degree
    int threads = 1;
};

struct EmbeddedBeamResult {
    int matrix_dofs = 0;
    int unknowns = 0;
    Eigen::Vector3d tip_displacement = Eigen::Vector3d::Zero();
    double constraint_violation = 0.0;  ///< max_k |phi(s_k) - x(X_c(s_k))|
    double max_unit_violation = 0.0;
    double force_balance = 0.0;         ///< |sum of point forces on the rod|
    SolveReport report;
    double seconds = 0.0;
    Eigen::VectorXd displacement;
    BeamCoefficients rod;
};

/// Host block, Dirichlet data and fiber of the configuration.
struct EmbeddedBeamSetup {
    ContinuumModel matrix;
    DirichletSet dirichlet;
    FiberEmbedding fiber;
};
[[nodiscard]] EmbeddedBeamSetup make_embedded_beam(const EmbeddedBeamConfig& config);

/// Condensed Newton solve of the configuration.
[[nodiscard]] EmbeddedBeamResult solve_embedded_beam(const EmbeddedBeamConfig& config, const NewtonConfig& newton);

}  // namespace miga
