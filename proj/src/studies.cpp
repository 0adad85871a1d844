#include "miga/studies.hpp"

#include "miga/errors.hpp"
#include "miga/output.hpp"
#include "miga/quadrature.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

namespace miga {

bool StudyResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ThresholdCheck& c) { return c.passed; });
}

void StudyResult::check(const std::string& name, double value, double lower, double upper) {
    checks.push_back({name, value, lower, upper, std::isfinite(value) && value >= lower && value <= upper});
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string kind_label(MultiplierKind k) {
    switch (k) {
        case MultiplierKind::Standard: return "standard";
        case MultiplierKind::DualGlued: return "dual-glued";
        case MultiplierKind::DualOptimal: return "dual-optimal";
    }
    return "?";
}

std::string quadrature_label(const MortarQuadrature& q) {
    return q.kind == QuadratureKind::Merged ? "merged" : "sample:" + std::to_string(q.samples);
}

// Master [0, s] x [0, 1], slave [s, 1] x [0, 1].
std::vector<Patch> split_square(int p, int nmaster, int nslave, double s) {
    return {Patch::box({p, p}, {nmaster, nmaster}, {0.0, 0.0}, {s, 1.0}),
            Patch::box({p, p}, {nslave, nslave}, {s, 0.0}, {1.0, 1.0})};
}

Interface split_interface(MultiplierKind kind) {
    Interface i;
    i.slave_patch = 1;
    i.slave_side = 0;
    i.master_patch = 0;
    i.master_side = 1;
    i.kind = kind;
    i.modify_start = true;
    i.modify_end = true;
    return i;
}

std::vector<DirichletBC> outer_dirichlet(const VectorField& g) {
    return {{0, 0, {}, g}, {0, 2, {}, g}, {0, 3, {}, g}, {1, 1, {}, g}, {1, 2, {}, g}, {1, 3, {}, g}};
}

std::span<const double> span2(const std::array<double, 3>& xi) { return {xi.data(), 2}; }

// Maximum stress deviation over a 5 x 5 lattice per element of every patch.
std::pair<double, double> stress_deviation(const ContinuumModel& m, const Eigen::VectorXd& u, const Eigen::Matrix3d& exact) {
    double worst = 0.0;
    double worst_vm = 0.0;
    const double vm_exact = von_mises(exact);
    for (int pi = 0; pi < static_cast<int>(m.patches().size()); ++pi) {
        const Patch& P = m.patch(pi);
        for (const Element& e : P.elements()) {
            for (int a = 0; a < 5; ++a) {
                for (int b = 0; b < 5; ++b) {
                    const std::array<double, 3> xi{e.lower[0] + (e.upper[0] - e.lower[0]) * a / 4.0,
                                                   e.lower[1] + (e.upper[1] - e.lower[1]) * b / 4.0, 0.0};
                    const Eigen::Matrix3d s = m.stress(u, pi, span2(xi));
                    worst = std::max(worst, (s - exact).cwiseAbs().maxCoeff());
                    worst_vm = std::max(worst_vm, std::abs(von_mises(s) - vm_exact));
                }
            }
        }
    }
    return {worst, worst_vm};
}

}  // namespace

// ============================================================================
// Patch test
// ============================================================================

StudyResult run_patch_test(const PatchTestSpec& spec, const RunOptions& options) {
    const auto t0 = Clock::now();
    StudyResult out;
    out.command = "patch-test";
    spec.material.validate();
    if (spec.material.kind != MaterialKind::LinearElasticPlaneStrain) {
        throw ConfigurationError("patch-test: material must be linear plane strain");
    }
    const int levels = options.refinement_levels ? *options.refinement_levels + 1 : spec.levels;
    std::vector<MortarQuadrature> quads;
    if (options.quadrature) {
        quads.push_back(*options.quadrature);
    } else {
        quads.push_back({});
        for (int m : spec.sample_points) quads.push_back({QuadratureKind::Sample, m, Measure::Physical});
    }

    const Eigen::Matrix2d G = spec.displacement_gradient;
    const VectorField g = [G](const Eigen::VectorXd& x) { return Eigen::VectorXd(G * x.head<2>()); };
    const Eigen::Matrix2d eps = 0.5 * (G + G.transpose());
    const double lam = spec.material.lame_lambda();
    const double mu = spec.material.lame_mu();
    Eigen::Matrix3d exact = Eigen::Matrix3d::Zero();
    exact.topLeftCorner<2, 2>() = 2 * mu * eps + lam * eps.trace() * Eigen::Matrix2d::Identity();
    exact(2, 2) = lam * eps.trace();
    out.metrics.emplace_back("exact-von-mises-stress-pa", von_mises(exact));

    for (int level = 0; level < levels; ++level) {
        const int nm = spec.master_elements << level;
        const int ns = spec.slave_elements << level;
        for (int p : spec.degrees) {
            std::vector<Patch> patches = split_square(p, nm, ns, spec.split_x);
            if (!spec.master_breaks_y.empty()) {
                std::vector<double> k(static_cast<std::size_t>(p + 1), 0.0);
                k.insert(k.end(), spec.master_breaks_y.begin(), spec.master_breaks_y.end());
                k.insert(k.end(), static_cast<std::size_t>(p + 1), 1.0);
                patches[0] = Patch::box({KnotVector::open_uniform(p, nm, 0.0, spec.split_x),
                                         KnotVector(k, p).refined_uniform(level)});
            }
            const ContinuumModel model(std::move(patches), spec.material);
            const DirichletSet bc = interpolate_dirichlet(model, outer_dirichlet(g));
            const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.num_dofs());
            for (MultiplierKind kind : spec.multipliers) {
                const std::string base = "p" + std::to_string(p) + "-" + kind_label(kind);
                std::vector<double> sample_errors;
                for (const MortarQuadrature& q : quads) {
                    const MortarCoupling c = assemble_coupling(model, {split_interface(kind)}, q);
                    const Eigen::VectorXd u = solve_condensed(model, c, bc, zero);
                    const auto [dev, dev_vm] = stress_deviation(model, u, exact);
                    const std::string label = base + "-" + quadrature_label(q);
                    out.rows.push_back({level, model.num_dofs(), label, "max-stress-error", dev});
                    out.rows.push_back({level, model.num_dofs(), label, "max-vm-stress-error", dev_vm});
                    if (q.kind == QuadratureKind::Merged) {
                        out.check("merged stress error " + base + " level " + std::to_string(level), dev, 0.0,
                                  spec.max_merged_error);
                        if (level == levels - 1 && p == spec.degrees.back() && kind == spec.multipliers.back()) {
                            out.artifacts.push_back({"fields_patch_test.vtk", vtk_continuum(model, u, 4)});
                        }
                    } else {
                        sample_errors.push_back(dev_vm);
                    }
                }
                if (spec.require_monotone_samples && sample_errors.size() > 1) {
                    double worst_ratio = 0.0;
                    for (std::size_t i = 1; i < sample_errors.size(); ++i) {
                        worst_ratio = std::max(worst_ratio, sample_errors[i] / sample_errors[i - 1]);
                    }
                    // Strict decrease: every ratio below one.
                    out.check("sample-point von Mises error decreasing " + base + " level " + std::to_string(level), worst_ratio, 0.0,
                              std::nextafter(1.0, 0.0));
                }
            }
        }
    }
    out.seconds = seconds_since(t0);
    return out;
}

// ============================================================================
// Mortar convergence
// ============================================================================

ManufacturedSolution manufactured_solution(const std::string& name) {
    using std::numbers::pi;
    ManufacturedSolution s;
    if (name == "sine-exp") {
        s.value = [](const Eigen::VectorXd& x) { return std::sin(pi * x[0]) * std::sin(2 * pi * x[1]) + std::exp(x[0]) * x[1]; };
        s.gradient = [](const Eigen::VectorXd& x) {
            return Eigen::Vector2d(pi * std::cos(pi * x[0]) * std::sin(2 * pi * x[1]) + std::exp(x[0]) * x[1],
                                   2 * pi * std::sin(pi * x[0]) * std::cos(2 * pi * x[1]) + std::exp(x[0]));
        };
        s.source = [](const Eigen::VectorXd& x) {
            return 5 * pi * pi * std::sin(pi * x[0]) * std::sin(2 * pi * x[1]) - std::exp(x[0]) * x[1];
        };
    } else if (name == "sine") {
        s.value = [](const Eigen::VectorXd& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
        s.gradient = [](const Eigen::VectorXd& x) {
            return Eigen::Vector2d(pi * std::cos(pi * x[0]) * std::sin(pi * x[1]), pi * std::sin(pi * x[0]) * std::cos(pi * x[1]));
        };
        s.source = [](const Eigen::VectorXd& x) { return 2 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    } else {
        throw ConfigurationError("unknown manufactured solution '" + name + "' (expected sine-exp or sine)");
    }
    return s;
}

double energy_error(const ContinuumModel& model, const Eigen::VectorXd& u,
                    const std::function<Eigen::Vector2d(const Eigen::VectorXd&)>& exact_gradient) {
    if (model.ncomp() != 1) throw ConfigurationError("energy_error: scalar model expected");
    double e2 = 0.0;
    for (int pi = 0; pi < static_cast<int>(model.patches().size()); ++pi) {
        const Patch& P = model.patch(pi);
        if (P.dim() != 2) throw ConfigurationError("energy_error: 2D patches expected");
        const Eigen::MatrixXd coef = model.patch_coefficients(u, pi);
        const int n0 = P.space(0).degree() + 3;
        const int n1 = P.space(1).degree() + 3;
        for (const Element& e : P.elements()) {
            for (const QuadPoint& q : P.quadrature(e, {n0, n1, 1})) {
                const PointData pd = P.evaluate(span2(q.xi));
                const Eigen::MatrixXd gh = physical_gradient(P, coef, span2(q.xi));
                const Eigen::Vector2d d = gh.row(0).transpose() - exact_gradient(pd.x);
                e2 += q.weight * std::abs(pd.detJ) * d.squaredNorm();
            }
        }
    }
    return std::sqrt(e2);
}

double convergence_slope(const std::vector<double>& h, const std::vector<double>& error, int count) {
    const auto n = static_cast<int>(std::min(h.size(), error.size()));
    if (count < 2 || n < count) throw ConfigurationError("convergence_slope: need at least two levels");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = n - count; i < n; ++i) {
        const double x = std::log(1.0 / h[static_cast<std::size_t>(i)]);
        const double y = std::log(error[static_cast<std::size_t>(i)]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return -(count * sxy - sx * sy) / (count * sxx - sx * sx);
}

StudyResult run_mortar_convergence(const ConvergenceSpec& spec, const RunOptions& options) {
    const auto t0 = Clock::now();
    StudyResult out;
    out.command = "mortar-convergence";
    const ManufacturedSolution sol = manufactured_solution(spec.solution);
    const VectorField g = [&sol](const Eigen::VectorXd& x) { return (Eigen::VectorXd(1) << sol.value(x)).finished(); };
    const ScalarField src = sol.source;
    out.notes.emplace_back("solution", spec.solution);
    const MortarQuadrature quad = options.quadrature.value_or(MortarQuadrature{});
    out.notes.emplace_back("quadrature", quadrature_label(quad));

    for (const ConvergenceCase& cs : spec.cases) {
        const int refinements = options.refinement_levels.value_or(cs.refinements);
        std::vector<double> h;
        std::vector<double> err;
        for (int level = 0; level <= refinements; ++level) {
            const int nm = cs.master_elements << level;
            const int ns = cs.slave_elements << level;
            const ContinuumModel model(split_square(cs.degree, nm, ns, spec.split_x), Material{});
            const DirichletSet bc = interpolate_dirichlet(model, outer_dirichlet(g));
            const MortarCoupling c = assemble_coupling(model, {split_interface(cs.multiplier)}, quad);
            const Eigen::VectorXd u = solve_condensed(model, c, bc, Eigen::VectorXd::Zero(model.num_dofs()), &src);
            const double e = energy_error(model, u, sol.gradient);
            h.push_back(std::max(spec.split_x / nm, (1.0 - spec.split_x) / ns));
            err.push_back(e);
            out.rows.push_back({level, model.num_dofs(), cs.label, "energy-norm-error", e});
            if (level > 0) {
                const double rate = std::log(err[err.size() - 2] / e) / std::log(h[h.size() - 2] / h.back());
                out.rows.push_back({level, model.num_dofs(), cs.label, "rate", rate});
            }
            if (level == refinements && model.num_dofs() <= 20000) {
                out.artifacts.push_back({"fields_" + cs.label + ".vtk", vtk_continuum(model, u, 3)});
            }
        }
        const int count = std::min(spec.slope_levels, static_cast<int>(h.size()));
        const double slope = convergence_slope(h, err, count);
        out.rows.push_back({refinements, 0, cs.label, "slope", slope});
        out.metrics.emplace_back(cs.label + "-slope", slope);
        if (std::isfinite(cs.slope_min) || std::isfinite(cs.slope_max)) {
            out.check("energy slope " + cs.label, slope, cs.slope_min, cs.slope_max);
        }
    }
    out.seconds = seconds_since(t0);
    return out;
}

// ============================================================================
// Beam cantilever
// ============================================================================

StudyResult run_beam_cantilever(const CantileverSpec& spec, const NewtonConfig& newton, const RunOptions& options) {
    const auto t0 = Clock::now();
    StudyResult out;
    out.command = "beam-cantilever";
    if (spec.elements.empty()) throw ConfigurationError("beam-cantilever: no meshes");
    std::vector<int> meshes = spec.elements;
    if (options.refinement_levels) {
        meshes.resize(std::min(meshes.size(), static_cast<std::size_t>(*options.refinement_levels + 1)));
    }
    NewtonConfig cfg = newton;
    cfg.load_steps = spec.load_steps;
    const double L = spec.length;
    const double EI = spec.section.K2()[0];
    out.metrics.emplace_back("bending-stiffness-nm2", EI);

    for (std::size_t level = 0; level < meshes.size(); ++level) {
        const int ne = meshes[level];
        const BeamModel model(KnotVector::open_uniform(spec.degree, ne, 0.0, L), spec.section, Eigen::Vector3d::Zero());
        const int dofs = 13 * model.num_basis();
        const bool finest = level + 1 == meshes.size();
        for (const CantileverCase& cs : spec.cases) {
            const double angle = 2 * std::numbers::pi * cs.end_moment_turns;
            const Eigen::Vector3d M(angle * EI / L, 0.0, 0.0);
            const CantileverResult r = solve_cantilever(model, cs.end_force, M, cfg);
            const auto lvl = static_cast<int>(level);
            out.rows.push_back({lvl, dofs, cs.label, "tip-rotation", r.tip_rotation});
            out.rows.push_back({lvl, dofs, cs.label, "tip-x", r.tip_position[0]});
            out.rows.push_back({lvl, dofs, cs.label, "tip-y", r.tip_position[1]});
            out.rows.push_back({lvl, dofs, cs.label, "tip-z", r.tip_position[2]});
            out.rows.push_back({lvl, dofs, cs.label, "unit-violation", r.max_unit_violation});
            out.rows.push_back({lvl, dofs, cs.label, "newton-iterations", static_cast<double>(r.report.iterations)});
            const bool analytic = cs.end_force.norm() == 0.0 && angle != 0.0 && std::abs(angle) <= 2 * std::numbers::pi;
            double rot_err = 0.0;
            double pos_err = 0.0;
            if (analytic) {
                const double rho = L / angle;
                const Eigen::Vector3d exact(0.0, rho * (std::cos(angle) - 1.0), rho * std::sin(angle));
                rot_err = std::abs(r.tip_rotation - std::abs(angle)) / std::abs(angle);
                pos_err = (r.tip_position - exact).norm() / L;
                out.rows.push_back({lvl, dofs, cs.label, "rotation-relative-error", rot_err});
                out.rows.push_back({lvl, dofs, cs.label, "position-error-per-length", pos_err});
            }
            if (finest) {
                const std::string tag = cs.label + " with " + std::to_string(ne) + " elements";
                if (std::isfinite(cs.max_rotation_error)) out.check("rotation error " + tag, rot_err, 0.0, cs.max_rotation_error);
                if (std::isfinite(cs.max_position_error)) out.check("position error " + tag, pos_err, 0.0, cs.max_position_error);
                if (std::isfinite(cs.max_unit_violation)) {
                    out.check("unit quaternion violation " + tag, r.max_unit_violation, 0.0, cs.max_unit_violation);
                }
                out.artifacts.push_back({"fields_rod_" + cs.label + ".vtk", vtk_rod(model, r.state)});
            }
        }
    }
    out.seconds = seconds_since(t0);
    return out;
}

// ============================================================================
// Embedded beam
// ============================================================================

StudyResult run_embedded_beam(const EmbeddedSpec& spec, const NewtonConfig& newton, const RunOptions& options) {
    const auto t0 = Clock::now();
    StudyResult out;
    out.command = "embedded-beam";
    std::vector<int> meshes = spec.elements_xy;
    if (meshes.empty()) throw ConfigurationError("embedded-beam: no meshes");
    if (options.refinement_levels) {
        meshes.resize(std::min(meshes.size(), static_cast<std::size_t>(*options.refinement_levels + 1)));
    }
    NewtonConfig cfg = newton;
    cfg.load_steps = spec.load_steps;
    const double L = spec.base.length;
    out.metrics.emplace_back("fiber-young-modulus-pa", spec.base.fiber_young);
    out.metrics.emplace_back("matrix-young-modulus-pa", spec.base.matrix_young);
    out.metrics.emplace_back("tip-moment-nm", spec.base.tip_moment.norm());
    out.metrics.emplace_back("reference-tip-displacement-m", spec.reference_tip_displacement);

    std::vector<double> tips;
    int worst_iterations = 0;
    for (std::size_t level = 0; level < meshes.size(); ++level) {
        EmbeddedBeamConfig c = spec.base;
        c.elements_xy = meshes[level];
        c.threads = options.threads;
        EmbeddedBeamResult r = solve_embedded_beam(c, cfg);
        const auto lvl = static_cast<int>(level);
        const std::string label = "n" + std::to_string(meshes[level]);
        out.rows.push_back({lvl, r.unknowns, label, "tip-displacement", r.tip_displacement.norm()});
        out.rows.push_back({lvl, r.unknowns, label, "tip-displacement-y", r.tip_displacement[1]});
        out.rows.push_back({lvl, r.unknowns, label, "tip-displacement-z", r.tip_displacement[2]});
        out.rows.push_back({lvl, r.unknowns, label, "constraint-violation", r.constraint_violation});
        out.rows.push_back({lvl, r.unknowns, label, "unit-violation", r.max_unit_violation});
        out.rows.push_back({lvl, r.unknowns, label, "newton-iterations", static_cast<double>(r.report.iterations)});
        out.rows.push_back({lvl, r.unknowns, label, "seconds", r.seconds});
        if (!r.report.converged) {
            throw SolverError("embedded-beam: Newton failed on mesh " + label + " at load step " +
                              std::to_string(r.report.load_step) + ": " + r.report.message);
        }
        const int per_step = r.report.step_iterations.empty()
                                 ? 0
                                 : *std::max_element(r.report.step_iterations.begin(), r.report.step_iterations.end());
        worst_iterations = std::max(worst_iterations, per_step);
        out.check("constraint violation per length " + label, r.constraint_violation / L, 0.0, spec.max_constraint_violation);
        tips.push_back(r.tip_displacement.norm());
        if (level + 1 == meshes.size()) {
            const auto setup = make_embedded_beam(c);
            out.artifacts.push_back({"fields_matrix.vtk", vtk_continuum(setup.matrix, r.displacement, 2)});
            out.artifacts.push_back({"fields_fiber.vtk", vtk_rod(setup.fiber.beam(), r.rod)});
        }
    }
    out.check("max Newton iterations per load step", worst_iterations, 0.0, spec.max_iterations_per_step);
    const double finest = tips.back();
    out.metrics.emplace_back("tip-displacement-m", finest);
    if (tips.size() >= 2) {
        const double change = std::abs(finest - tips[tips.size() - 2]) / finest;
        out.metrics.emplace_back("plateau-change", change);
        out.check("tip displacement change between the two finest meshes", change, 0.0, spec.max_plateau_change);
    }
    const double gap = std::abs(finest - spec.reference_tip_displacement);
    out.metrics.emplace_back("reference-gap-m", gap);
    out.metrics.emplace_back("reference-gap-relative", gap / spec.reference_tip_displacement);
    out.check("reported gap to the reference tip displacement is nonzero", gap,
              std::numeric_limits<double>::min(), std::numeric_limits<double>::infinity());
    out.seconds = seconds_since(t0);
    out.check("runtime seconds", out.seconds, 0.0, spec.max_seconds);
    return out;
}

// ============================================================================
// Dual basis dump
// ============================================================================

StudyResult run_dual_basis_dump(const DualDumpSpec& spec) {
    const auto t0 = Clock::now();
    StudyResult out;
    out.command = "dual-basis-dump";
    const KnotVector& kv = spec.trace;
    const int p = kv.degree();
    const DualBasis dual = make_dual_basis(kv, spec.stage);
    const PiecewiseBasis std_basis = standard_basis(kv);
    const std::vector<int> spans = kv.element_spans();

    std::ostringstream coeffs;
    coeffs.precision(17);
    coeffs << "element,lower,upper,function";
    for (int k = 0; k <= p; ++k) coeffs << ",t" << k;
    coeffs << "\n";
    const auto& pieces = dual.basis.pieces();
    for (std::size_t e = 0; e < pieces.size(); ++e) {
        const int span = pieces[e].span;
        for (int f : pieces[e].functions) {
            const Eigen::VectorXd c = dual.basis.monomial_coefficients(static_cast<int>(e), f);
            coeffs << e << "," << kv[static_cast<std::size_t>(span)] << "," << kv[static_cast<std::size_t>(span + 1)] << "," << f;
            for (Eigen::Index k = 0; k < c.size(); ++k) coeffs << "," << c[k];
            coeffs << "\n";
        }
    }
    out.artifacts.push_back({"dual_basis.csv", coeffs.str()});

    const Eigen::MatrixXd D = coupling_matrix(dual.basis, std_basis);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(D.rows(), D.cols());
    if (spec.stage == DualStage::Elementwise) {
        for (std::size_t e = 0; e < pieces.size(); ++e) {
            const int span = pieces[e].span;
            const QuadratureRule g = gauss_legendre(p + 1, kv[static_cast<std::size_t>(span)], kv[static_cast<std::size_t>(span + 1)]);
            for (std::size_t i = 0; i < pieces[e].functions.size(); ++i) {
                const int j = span - p + static_cast<int>(i);
                double integral = 0.0;
                for (std::size_t a = 0; a < g.points.size(); ++a) {
                    integral += g.weights[a] * eval_basis_derivs(kv, span, g.points[a], 0)(0, static_cast<Eigen::Index>(i));
                }
                expected(pieces[e].functions[i], j) = integral;
            }
        }
    } else {
        expected.diagonal() = integrals(std_basis);
    }
    std::ostringstream check;
    check.precision(17);
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
        for (Eigen::Index j = 0; j < D.cols(); ++j) check << (j ? "," : "") << D(i, j);
        check << "\n";
    }
    out.artifacts.push_back({"biorthogonality.csv", check.str()});
    const double bio = (D - expected).cwiseAbs().maxCoeff();
    out.rows.push_back({0, dual.basis.size(), "dual", "biorthogonality-error", bio});
    out.check("biorthogonality", bio, 0.0, 1e-10);

    // Partition of unity on each element, sampled at Gauss points.
    double pou = 0.0;
    for (std::size_t e = 0; e < pieces.size(); ++e) {
        const int span = pieces[e].span;
        const QuadratureRule g = gauss_legendre(p + 2, kv[static_cast<std::size_t>(span)], kv[static_cast<std::size_t>(span + 1)]);
        for (double x : g.points) pou = std::max(pou, std::abs(dual.basis.eval_on(static_cast<int>(e), x).sum() - 1.0));
    }
    out.rows.push_back({0, dual.basis.size(), "dual", "partition-of-unity-error", pou});
    out.check("partition of unity", pou, 0.0, 1e-12);
    out.seconds = seconds_since(t0);
    return out;
}

}  // namespace miga
