/**
 * @file mortar.hpp
 * @brief Weak coupling of two-dimensional patches along curved interfaces.
 *
 * A constraint block couples the trace of a slave side to the trace of a master side through
 * a multiplier basis built on the slave trace knot vector. Rows are multipliers, columns are
 * all scalar basis functions of the respective patch:
 *
 *     D(i, A) = int psi_i R^s_A ds,   M(i, B) = int psi_i R^m_B ds,   constraint D u_s - M u_m = 0.
 */
#pragma once

#include "miga/continuum.hpp"
#include "miga/dual_basis.hpp"
#include "miga/newton.hpp"

#include <Eigen/Dense>

#include <vector>

namespace miga {

enum class MultiplierKind { Standard, DualGlued, DualOptimal };

struct Interface {
    int slave_patch = 0;
    int slave_side = 0;
    int master_patch = 1;
    int master_side = 0;
    MultiplierKind kind = MultiplierKind::DualGlued;
    /// Crosspoint modification with l = 1 at the start / end of the slave trace.
    bool modify_start = false;
    bool modify_end = false;
};

enum class QuadratureKind { Merged, Sample };
enum class Measure { Parametric, Physical };

struct MortarQuadrature {
    QuadratureKind kind = QuadratureKind::Merged;
    int samples = 4;  ///< midpoints per slave element for QuadratureKind::Sample
    Measure measure = Measure::Physical;
};

struct ConstraintBlock {
    SpMat slave;   ///< nmult x slave.num_basis()
    SpMat master;  ///< nmult x master.num_basis()
    /// Trace index (along the slave side) paired with each multiplier.
    std::vector<int> paired_trace;
    /// Slave patch basis index paired with each multiplier.
    std::vector<int> paired_basis;
};

/// Trace knot vector of a patch side (the remaining parametric direction).
[[nodiscard]] const KnotVector& side_trace(const Patch& patch, int side);

/// Multiplier basis on the slave trace, including crosspoint modifications.
[[nodiscard]] PiecewiseBasis multiplier_basis(const Patch& slave, const Interface& iface);

/// Breakpoints on the slave trace: slave knots together with master knots mapped onto the slave curve.
[[nodiscard]] std::vector<double> merge_interface_mesh(const Patch& slave, int slave_side, const Patch& master,
                                                       int master_side);

/// C0 coupling: int psi (u_s - u_m) ds.
[[nodiscard]] ConstraintBlock assemble_c0(const Patch& slave, const Patch& master, const Interface& iface,
                                          const MortarQuadrature& quad = {});

/// C1 coupling of normal derivatives with the glued dual basis: int psi (grad u_s - grad u_m) . n_s ds.
/// Throws UnsupportedInputError for trace degree below 2.
[[nodiscard]] ConstraintBlock assemble_c1(const Patch& slave, const Patch& master, const Interface& iface,
                                          const MortarQuadrature& quad = {});

/// Multi-patch coupling for a continuum model; vector fields get one multiplier per component.
struct MortarCoupling {
    SpMat B;                      ///< constraints B u = 0, rows multiplier * ncomp + c
    std::vector<int> slave_dofs;  ///< global dof paired with each row
    std::vector<ConstraintBlock> blocks;
};

[[nodiscard]] MortarCoupling assemble_coupling(const ContinuumModel& model, const std::vector<Interface>& interfaces,
                                               const MortarQuadrature& quad = {});

/// Affine parametrization u = T v + g of the constrained space, v being the non-slave dofs.
struct CondensedMap {
    SpMat T;                    ///< ndof x nfree
    Eigen::VectorXd g;          ///< ndof
    std::vector<int> free_dofs; ///< global dof of each reduced unknown
    std::vector<int> reduced;   ///< reduced index of each global dof, -1 on slave dofs
};

/// Eliminates the paired slave dofs from B u = c. Throws SingularSystemError when the slave block is singular.
[[nodiscard]] CondensedMap condense(const SpMat& B, const Eigen::VectorXd& c, const std::vector<int>& slave_dofs,
                                    int ndof);

/// Continuum problem coupled by mortar constraints and solved in the condensed space.
class CondensedMortarProblem : public NonlinearSystem {
public:
    CondensedMortarProblem(const ContinuumModel& model, const MortarCoupling& coupling, DirichletSet dirichlet,
                           Eigen::VectorXd external, const ScalarField* source = nullptr);

    [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& v) override;
    [[nodiscard]] SpMat jacobian(const Eigen::VectorXd& v) override;
    void set_load_factor(double factor) override { load_ = factor; }

    /// Reduced state with prescribed values and zeros elsewhere.
    [[nodiscard]] Eigen::VectorXd initial_state() const;
    [[nodiscard]] Eigen::VectorXd expand(const Eigen::VectorXd& v) const;
    [[nodiscard]] const CondensedMap& map() const noexcept { return map_; }

private:
    const ContinuumModel& model_;
    CondensedMap map_;
    std::vector<char> fixed_;  ///< on reduced unknowns
    Eigen::VectorXd fixed_values_;
    Eigen::VectorXd external_;
    const ScalarField* source_;
    double load_ = 1.0;
};

/// Solves the coupled problem by Newton's method in the condensed space.
[[nodiscard]] Eigen::VectorXd solve_condensed(const ContinuumModel& model, const MortarCoupling& coupling,
                                              const DirichletSet& dirichlet, const Eigen::VectorXd& external,
                                              const ScalarField* source = nullptr, const NewtonConfig& config = {},
                                              SolveReport* report = nullptr);

/// Linear saddle-point oracle: Dirichlet dofs eliminated, constraints kept with multipliers.
[[nodiscard]] SaddleSolution solve_linear_saddle(const ContinuumModel& model, const MortarCoupling& coupling,
                                                 const DirichletSet& dirichlet, const Eigen::VectorXd& external,
                                                 const ScalarField* source = nullptr);

}  // namespace miga
