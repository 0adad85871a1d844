/**
 * @file continuum.hpp
 * @brief Multi-patch continuum discretizations: Poisson, plane-strain linear elasticity and
 * Saint-Venant-Kirchhoff hyperelasticity, plus Dirichlet and Neumann data.
 *
 * Unknowns are control-point coefficients of the solution field (displacement for solids).
 * Global numbering: offset(patch) + ncomp * A + c.
 */
#pragma once

#include "miga/patch.hpp"
#include "miga/sparse.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace miga {

enum class MaterialKind { Poisson, LinearElasticPlaneStrain, SaintVenantKirchhoff };

struct Material {
    MaterialKind kind = MaterialKind::Poisson;
    double young_modulus = 1.0;
    double poisson_ratio = 0.0;

    /// Throws ConfigurationError unless E > 0 and -1 < nu < 0.5.
    void validate() const;
    [[nodiscard]] double lame_lambda() const {
        return young_modulus * poisson_ratio / ((1 + poisson_ratio) * (1 - 2 * poisson_ratio));
    }
    [[nodiscard]] double lame_mu() const { return young_modulus / (2 * (1 + poisson_ratio)); }
};

struct SvkResponse {
    Eigen::Matrix3d P;  ///< first Piola-Kirchhoff stress
    Eigen::Matrix3d S;  ///< second Piola-Kirchhoff stress
    double psi = 0.0;   ///< strain energy density
};

/// Throws ElementInversionError (carrying `element`) when det F <= 0.
[[nodiscard]] SvkResponse svk_stress(const Material& mat, const Eigen::Matrix3d& F, long element = -1);

/// dP/dF with row index 3*i+J and column index 3*k+L.
[[nodiscard]] Eigen::Matrix<double, 9, 9> svk_tangent(const Material& mat, const Eigen::Matrix3d& F);

using ScalarField = std::function<double(const Eigen::VectorXd& x)>;
using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;

class ContinuumModel {
public:
    ContinuumModel() = default;
    ContinuumModel(std::vector<Patch> patches, Material material);

    [[nodiscard]] const std::vector<Patch>& patches() const noexcept { return patches_; }
    [[nodiscard]] const Patch& patch(int i) const { return patches_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const Material& material() const noexcept { return material_; }
    [[nodiscard]] int ncomp() const noexcept { return ncomp_; }
    [[nodiscard]] int num_dofs() const noexcept { return ndof_; }
    [[nodiscard]] int offset(int patch) const { return offsets_[static_cast<std::size_t>(patch)]; }
    [[nodiscard]] int dof(int patch, int A, int c) const { return offset(patch) + ncomp_ * A + c; }

    /// Element-parallel assembly (deterministic for a fixed thread count).
    void set_threads(int n) { threads_ = n < 1 ? 1 : n; }

    /// r = internal forces(u) - body source; K = dr/du. Either output may be null.
    void assemble(const Eigen::VectorXd& u, Eigen::VectorXd* r, SpMat* K, const ScalarField* source = nullptr) const;

    /// Stored energy of the state (solids) or 1/2 grad u . grad u (Poisson).
    [[nodiscard]] double energy(const Eigen::VectorXd& u) const;

    /// Coefficients of one patch as a (num_basis x ncomp) matrix.
    [[nodiscard]] Eigen::MatrixXd patch_coefficients(const Eigen::VectorXd& u, int patch) const;

    /// Stress at a parametric point: Cauchy for linear elasticity, first Piola-Kirchhoff for SVK,
    /// flux for Poisson (first row). Always 3x3, plane-strain out-of-plane stress included.
    [[nodiscard]] Eigen::Matrix3d stress(const Eigen::VectorXd& u, int patch, std::span<const double> xi) const;

private:
    std::vector<Patch> patches_;
    Material material_;
    int ncomp_ = 1;
    int ndof_ = 0;
    std::vector<int> offsets_;
    std::vector<SparseAssembler> assemblers_;
    SparseAssembler global_;
    int threads_ = 1;
};

[[nodiscard]] double von_mises(const Eigen::Matrix3d& sigma);

struct DirichletBC {
    int patch = 0;
    int side = 0;
    std::vector<int> components;  ///< empty means all components
    VectorField value;
};

struct NeumannBC {
    int patch = 0;
    int side = 0;
    VectorField traction;
};

/// Prescribed coefficients from interpolation of boundary data at face Greville points.
struct DirichletSet {
    std::vector<char> fixed;
    Eigen::VectorXd values;

    [[nodiscard]] int count() const;
    /// Sets prescribed entries of u.
    void impose(Eigen::VectorXd& u) const;
};

/// Throws ConfigurationError on conflicting values at shared control points.
[[nodiscard]] DirichletSet interpolate_dirichlet(const ContinuumModel& model, const std::vector<DirichletBC>& bcs);

/// Consistent nodal loads from face tractions.
[[nodiscard]] Eigen::VectorXd assemble_neumann(const ContinuumModel& model, const std::vector<NeumannBC>& bcs);

/// Quadrature points on a patch side: parametric point, weight times surface measure, outward unit normal.
struct FacePoint {
    std::array<double, 3> xi{0, 0, 0};
    double weight = 0.0;
    Eigen::VectorXd normal;
};
[[nodiscard]] std::vector<FacePoint> face_quadrature(const Patch& patch, int side, int extra_points = 0);

}  // namespace miga
