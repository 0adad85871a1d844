#pragma once

#include "miga/sparse.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace miga {

struct NewtonConfig {
    double abs_tol = 1e-10;       ///< on the max norm of the residual
    double rel_tol = 1e-12;       ///< on the max norm relative to the first residual of a load step
    int max_iters = 30;
    double backtrack = 0.5;
    double min_step = 1.0 / 1024.0;
    int load_steps = 1;
    int divergence_window = 5;    ///< consecutive accepted steps with residual growth
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;                   ///< total over all load steps
    std::vector<int> step_iterations;     ///< per load step
    std::vector<double> residual_history; ///< max norms, all load steps concatenated
    double final_residual = 0.0;
    int load_step = 0;                    ///< last load step attempted (1-based)
    std::string message;
};

/// Residual system F(x) = 0 with an exact Jacobian.
class NonlinearSystem {
public:
    virtual ~NonlinearSystem() = default;
    [[nodiscard]] virtual Eigen::VectorXd residual(const Eigen::VectorXd& x) = 0;
    [[nodiscard]] virtual SpMat jacobian(const Eigen::VectorXd& x) = 0;
    /// Newton correction dx solving J(x) dx = -r; the default factorizes the Jacobian with sparse LU.
    [[nodiscard]] virtual Eigen::VectorXd solve_step(const Eigen::VectorXd& x, const Eigen::VectorXd& r);
    /// Scales applied loads for incremental loading.
    virtual void set_load_factor(double /*factor*/) {}
    /// False when the residual norm is a poor merit function (mixed systems with rows of very different
    /// scale); Newton then takes full steps and backtracks only on non-finite residuals.
    [[nodiscard]] virtual bool residual_is_merit() const { return true; }
};

/// Damped Newton iteration with backtracking on the residual 2-norm. When no step down to min_step
/// decreases the residual, the full step is taken and counts toward the divergence window.
/// Systems whose residual is not a merit function backtrack only on non-finite residuals.
/// Throws SolverError (divergence, no convergence) carrying the report text.
SolveReport newton_solve(NonlinearSystem& system, Eigen::VectorXd& x, const NewtonConfig& config);

/// Same as newton_solve but returns the report without throwing on non-convergence.
SolveReport newton_solve_nothrow(NonlinearSystem& system, Eigen::VectorXd& x, const NewtonConfig& config);

/// KKT solve of [K B^T; B 0][x; l] = [f; g] by sparse LU.
struct SaddleSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd multipliers;
    double constraint_residual = 0.0;
};
[[nodiscard]] SaddleSolution solve_saddle(const SpMat& K, const SpMat& B, const Eigen::VectorXd& f,
                                          const Eigen::VectorXd& g);

}  // namespace miga
