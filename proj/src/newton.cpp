#include "miga/newton.hpp"

#include "miga/errors.hpp"

#include <cmath>
#include <sstream>

namespace miga {

Eigen::VectorXd NonlinearSystem::solve_step(const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
    return sparse_lu_solve(jacobian(x), -r);
}

namespace {

double max_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

SolveReport newton_solve_nothrow(NonlinearSystem& system, Eigen::VectorXd& x, const NewtonConfig& cfg) {
    if (cfg.abs_tol <= 0 || cfg.rel_tol <= 0 || cfg.max_iters < 1 || cfg.load_steps < 1) {
        throw ConfigurationError("newton: tolerances must be positive and iteration/step counts at least one");
    }
    SolveReport rep;
    for (int step = 1; step <= cfg.load_steps; ++step) {
        rep.load_step = step;
        system.set_load_factor(static_cast<double>(step) / cfg.load_steps);
        Eigen::VectorXd r = system.residual(x);
        double rn = max_norm(r);
        const double r0 = rn;
        rep.residual_history.push_back(rn);
        int iters = 0;
        int growth = 0;
        bool ok = rn <= cfg.abs_tol;
        while (!ok && iters < cfg.max_iters) {
            Eigen::VectorXd dx;
            try {
                dx = system.solve_step(x, r);
            } catch (const SingularSystemError& e) {
                rep.message = std::string("linear solve failed: ") + e.what();
                rep.step_iterations.push_back(iters);
                rep.final_residual = rn;
                return rep;
            }
            const double r2 = r.norm();
            const bool merit = system.residual_is_merit();
            double t = 1.0;
            Eigen::VectorXd xt;
            Eigen::VectorXd rt;
            while (true) {
                xt = x + t * dx;
                rt = system.residual(xt);
                if (rt.allFinite() && (!merit || rt.norm() < r2)) break;
                if (t * cfg.backtrack < cfg.min_step) {
                    if (!merit) break;
                    xt = x + dx;
                    rt = system.residual(xt);
                    break;
                }
                t *= cfg.backtrack;
            }
            ++iters;
            const double rtn = max_norm(rt);
            growth = (!rt.allFinite() || rt.norm() >= r2) ? growth + 1 : 0;
            x = xt;
            r = rt;
            rn = rtn;
            rep.residual_history.push_back(rn);
            if (!std::isfinite(rn) || growth >= cfg.divergence_window) {
                std::ostringstream os;
                os << "newton diverged at load step " << step << " after " << iters << " iterations";
                rep.message = os.str();
                rep.step_iterations.push_back(iters);
                rep.iterations += iters;
                rep.final_residual = rn;
                return rep;
            }
            ok = rn <= cfg.abs_tol || rn <= cfg.rel_tol * r0;
        }
        rep.step_iterations.push_back(iters);
        rep.iterations += iters;
        rep.final_residual = rn;
        if (!ok) {
            std::ostringstream os;
            os << "newton did not converge at load step " << step << " within " << cfg.max_iters
               << " iterations (residual " << rn << ")";
            rep.message = os.str();
            return rep;
        }
    }
    rep.converged = true;
    return rep;
}

SolveReport newton_solve(NonlinearSystem& system, Eigen::VectorXd& x, const NewtonConfig& cfg) {
    SolveReport rep = newton_solve_nothrow(system, x, cfg);
    if (!rep.converged) throw SolverError(rep.message);
    return rep;
}

SaddleSolution solve_saddle(const SpMat& K, const SpMat& B, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
    const SpMat Bt = B.transpose();
    const SpMat Z(B.rows(), B.rows());
    const SpMat A = block_matrix(K, Bt, B, Z);
    Eigen::VectorXd rhs(f.size() + g.size());
    rhs << f, g;
    const Eigen::VectorXd sol = sparse_lu_solve(A, rhs);
    SaddleSolution out;
    out.x = sol.head(K.rows());
    out.multipliers = sol.tail(B.rows());
    out.constraint_residual = B.rows() ? (B * out.x - g).cwiseAbs().maxCoeff() : 0.0;
    return out;
}

}  // namespace miga
