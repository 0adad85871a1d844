#include "miga/beam.hpp"
#include "miga/dual_basis.hpp"
#include "miga/embedded.hpp"
#include "miga/errors.hpp"
#include "miga/mortar.hpp"
#include "miga/quadrature.hpp"
#include "miga/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace miga;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

KnotVector random_open(int p, int elements, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.2, 1.0);
    std::vector<double> k(static_cast<std::size_t>(p + 1), 0.0);
    double x = 0.0;
    for (int e = 0; e < elements; ++e) {
        x += u(rng);
        k.push_back(x);
    }
    for (int i = 0; i < p; ++i) k.push_back(x);
    return KnotVector(k, p);
}

// Composite Gauss integration of psi_i * phi_j, independent of the library's element matrices.
Eigen::MatrixXd brute_force_bc(const PiecewiseBasis& psi, const KnotVector& kv) {
    const PiecewiseBasis phi = standard_basis(kv);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(psi.size(), phi.size());
    const auto bp = kv.breakpoints();
    for (std::size_t e = 0; e + 1 < bp.size(); ++e) {
        for (int sub = 0; sub < 4; ++sub) {
            const double a = bp[e] + (bp[e + 1] - bp[e]) * sub / 4.0;
            const double b = bp[e] + (bp[e + 1] - bp[e]) * (sub + 1) / 4.0;
            const QuadratureRule q = gauss_legendre(8, a, b);
            for (std::size_t g = 0; g < q.points.size(); ++g) {
                out += q.weights[g] * psi.eval(q.points[g]) * phi.eval(q.points[g]).transpose();
            }
        }
    }
    return out;
}

// Expected integral matrix of a dual basis against the B-splines.
Eigen::MatrixXd expected_bc(const DualBasis& d, const KnotVector& kv) {
    const int p = kv.degree();
    const PiecewiseBasis phi = standard_basis(kv);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d.basis.size(), phi.size());
    if (d.stage != DualStage::Elementwise) {
        out.diagonal() = integrals(phi);
        return out;
    }
    for (const auto& piece : d.basis.pieces()) {
        const double a = kv[static_cast<std::size_t>(piece.span)];
        const double b = kv[static_cast<std::size_t>(piece.span + 1)];
        const QuadratureRule q = gauss_legendre(p + 1, a, b);
        for (std::size_t i = 0; i < piece.functions.size(); ++i) {
            const int j = piece.span - p + static_cast<int>(i);
            double v = 0.0;
            for (std::size_t g = 0; g < q.points.size(); ++g) v += q.weights[g] * phi.eval(q.points[g])[j];
            out(piece.functions[i], j) = v;
        }
    }
    return out;
}

double span_residual(const PiecewiseBasis& basis, const std::function<double(double)>& f) {
    const auto bp = basis.trace().breakpoints();
    std::vector<double> xs;
    for (std::size_t e = 0; e + 1 < bp.size(); ++e) {
        for (int s = 0; s < 7; ++s) xs.push_back(bp[e] + (bp[e + 1] - bp[e]) * (s + 0.5) / 7.0);
    }
    Eigen::MatrixXd A(static_cast<Eigen::Index>(xs.size()), basis.size());
    Eigen::VectorXd y(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t r = 0; r < xs.size(); ++r) {
        A.row(static_cast<Eigen::Index>(r)) = basis.eval(xs[r]).transpose();
        y[static_cast<Eigen::Index>(r)] = f(xs[r]);
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
    return (A * c - y).cwiseAbs().maxCoeff();
}

Outcome scenario_outcome(const std::string& file) {
    const Scenario s = load_scenario(std::string(MIGA_SCENARIO_DIR) + "/" + file);
    const StudyResult r = run_scenario(s, RunOptions{});
    Outcome o{r.passed(), ""};
    int failed = 0;
    for (const ThresholdCheck& c : r.checks) {
        if (c.passed) continue;
        o.detail += (failed++ ? "; " : "failed: ") + c.name + " = " + sci(c.value);
    }
    if (failed == 0) o.detail = std::to_string(r.checks.size()) + " checks";
    for (const auto& [k, v] : r.metrics) {
        if (k.find("slope") != std::string::npos || k == "tip-displacement-m" || k == "reference-gap-m" ||
            k == "plateau-change") {
            o.detail += ", " + k + " " + sci(v);
        }
    }
    o.detail += ", " + std::to_string(static_cast<int>(r.seconds)) + " s";
    return o;
}

// ----------------------------------------------------------------------------

Outcome criterion1() {
    double worst = 0.0;
    Eigen::MatrixXd a(2, 1);
    a << 1.5, -0.5;
    worst = std::max(worst, (crosspoint_matrix(2, 1).C - a).cwiseAbs().maxCoeff());
    Eigen::Matrix2d b;
    b << 2.5, 2, -1.5, -1;
    worst = std::max(worst, (crosspoint_matrix(2, 2).C - b).cwiseAbs().maxCoeff());
    Eigen::Matrix3d c;
    c << 37.0 / 6, 5, 3, -25.0 / 3, -19.0 / 3, -3, 19.0 / 6, 7.0 / 3, 1;
    worst = std::max(worst, (crosspoint_matrix(3, 3).C - c).cwiseAbs().maxCoeff());
    return {worst < 1e-12, "max deviation " + sci(worst)};
}

Outcome criterion2() {
    std::mt19937 rng(2024);
    double bio = 0.0;
    double pou = 0.0;
    for (int p = 1; p <= 3; ++p) {
        for (int t = 0; t < 10; ++t) {
            const KnotVector kv = random_open(p, 4 + t, rng);
            for (DualStage stage : {DualStage::Elementwise, DualStage::Glued}) {
                const DualBasis d = make_dual_basis(kv, stage);
                bio = std::max(bio, (brute_force_bc(d.basis, kv) - expected_bc(d, kv)).cwiseAbs().maxCoeff());
                if (stage == DualStage::Glued) {
                    std::uniform_real_distribution<double> u(kv.lower(), kv.upper());
                    for (int s = 0; s < 200; ++s) pou = std::max(pou, std::abs(d.basis.eval(u(rng)).sum() - 1.0));
                }
            }
        }
    }
    return {bio < 1e-10 && pou < 1e-12, "biorthogonality " + sci(bio) + ", partition of unity " + sci(pou)};
}

Outcome criterion3() {
    std::mt19937 rng(77);
    double worst = 0.0;
    for (int p = 2; p <= 3; ++p) {
        for (int t = 0; t < 4; ++t) {
            const KnotVector kv = t == 0 ? KnotVector::open_uniform(p, 10) : random_open(p, 6 + 2 * t, rng);
            const DualBasis d = make_dual_basis(kv, DualStage::Optimal);
            for (int k = 0; k <= p; ++k) {
                worst = std::max(worst, span_residual(d.basis, [k](double x) { return std::pow(x, k); }));
            }
        }
    }
    return {worst < 1e-9, "p = 2, 3, max least-squares residual " + sci(worst)};
}

double directional_fd_error(NonlinearSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    const double h = 1e-6;
    const Eigen::VectorXd fd = (sys.residual(x + h * v) - sys.residual(x - h * v)) / (2 * h);
    const Eigen::VectorXd jv = sys.jacobian(x) * v;
    return (fd - jv).norm() / std::max(1.0, jv.norm());
}

class ModelSystem : public NonlinearSystem {
public:
    explicit ModelSystem(const ContinuumModel& m) : m_(m) {}
    Eigen::VectorXd residual(const Eigen::VectorXd& u) override {
        Eigen::VectorXd r;
        m_.assemble(u, &r, nullptr);
        return r;
    }
    SpMat jacobian(const Eigen::VectorXd& u) override {
        SpMat K;
        m_.assemble(u, nullptr, &K);
        return K;
    }

private:
    const ContinuumModel& m_;
};

Eigen::VectorXd random_vector(Eigen::Index n, double amp, std::mt19937& rng) {
    std::uniform_real_distribution<double> U(-amp, amp);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = U(rng);
    return v;
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

Outcome criterion8() {
    std::mt19937 rng(8);
    double saddle = 0.0;
    // Mortar: condensed Newton against the saddle-point oracle.
    {
        const ManufacturedSolution sol = manufactured_solution("sine-exp");
        const ScalarField src = sol.source;
        const VectorField g = [&sol](const Eigen::VectorXd& x) { return (Eigen::VectorXd(1) << sol.value(x)).finished(); };
        for (MultiplierKind kind : {MultiplierKind::Standard, MultiplierKind::DualGlued, MultiplierKind::DualOptimal}) {
            const ContinuumModel m({Patch::box({2, 2}, {4, 4}, {0, 0}, {0.5, 1}), Patch::box({2, 2}, {6, 6}, {0.5, 0}, {1, 1})},
                                   Material{});
            const DirichletSet bc = interpolate_dirichlet(
                m, {{0, 0, {}, g}, {0, 2, {}, g}, {0, 3, {}, g}, {1, 1, {}, g}, {1, 2, {}, g}, {1, 3, {}, g}});
            const MortarCoupling c = assemble_coupling(m, {split_interface(kind)});
            const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m.num_dofs());
            const Eigen::VectorXd u = solve_condensed(m, c, bc, zero, &src);
            const SaddleSolution s = solve_linear_saddle(m, c, bc, zero, &src);
            saddle = std::max(saddle, (u - s.x).cwiseAbs().maxCoeff());
        }
    }
    // Embedded: condensed Schur solve against the unreduced saddle system.
    double embedded = 0.0;
    EmbeddedBeamConfig cfg;
    cfg.length = 2.0;
    cfg.radius = 0.1;
    cfg.fiber_young = 500.0;
    cfg.tip_moment = Eigen::Vector3d(-0.02, 0.0, 0.0);
    cfg.elements_xy = 2;
    cfg.degree_z = 3;
    const EmbeddedBeamSetup es = make_embedded_beam(cfg);
    {
        EmbeddedProblem cond(es.matrix, es.dirichlet, es.fiber, cfg.tip_moment);
        FullEmbeddedProblem full(es.matrix, es.dirichlet, es.fiber, cfg.tip_moment);
        NewtonConfig nc;
        nc.load_steps = 2;
        Eigen::VectorXd xc = cond.initial_state();
        Eigen::VectorXd xf = full.initial_state();
        const SolveReport rc = newton_solve_nothrow(cond, xc, nc);
        const SolveReport rf = newton_solve_nothrow(full, xf, nc);
        embedded = rc.converged && rf.converged ? (full.condensed(xf) - xc).cwiseAbs().maxCoeff() : INFINITY;
    }
    // Tangents against central differences.
    double fd = 0.0;
    std::string fd_worst;
    auto record = [&](const std::string& name, double e) {
        if (e > fd || fd_worst.empty()) fd_worst = name;
        fd = std::max(fd, e);
    };
    {
        const Material svk{MaterialKind::SaintVenantKirchhoff, 100.0, 0.3};
        const ContinuumModel m2({Patch::box({2, 2}, {2, 3}, {0, 0}, {1, 1})}, svk);
        const ContinuumModel m3({Patch::box({2, 2, 2}, {2, 1, 2}, {0, 0, 0}, {1, 1, 1})}, svk);
        const ContinuumModel mp({Patch::box({2, 2}, {3, 2}, {0, 0}, {1, 1})}, Material{});
        const std::vector<std::pair<std::string, const ContinuumModel*>> models{
            {"svk 2d", &m2}, {"svk 3d", &m3}, {"poisson", &mp}};
        for (const auto& [name, m] : models) {
            ModelSystem sys(*m);
            record(name, directional_fd_error(sys, random_vector(m->num_dofs(), 0.05, rng), random_vector(m->num_dofs(), 1.0, rng)));
        }
        const ContinuumModel two({Patch::box({2, 2}, {2, 2}, {0, 0}, {0.5, 1}), Patch::box({2, 2}, {3, 3}, {0.5, 0}, {1, 1})},
                                 svk);
        const VectorField zero2 = [](const Eigen::VectorXd&) { return Eigen::VectorXd(Eigen::Vector2d::Zero()); };
        const DirichletSet bc = interpolate_dirichlet(two, {{0, 0, {}, zero2}});
        const MortarCoupling c = assemble_coupling(two, {split_interface(MultiplierKind::DualOptimal)});
        CondensedMortarProblem mortar(two, c, bc, Eigen::VectorXd::Zero(two.num_dofs()));
        const Eigen::VectorXd v0 = mortar.initial_state();
        auto free_reduced = [&](Eigen::Index n) {
            Eigen::VectorXd v = random_vector(n, 1.0, rng);
            for (int d = 0; d < two.num_dofs(); ++d) {
                const int r = mortar.map().reduced[static_cast<std::size_t>(d)];
                if (r >= 0 && bc.fixed[static_cast<std::size_t>(d)]) v[r] = 0.0;
            }
            return v;
        };
        const Eigen::VectorXd dir = free_reduced(v0.size());
        const Eigen::VectorXd x = v0 + 0.05 * free_reduced(v0.size());
        record("condensed mortar", directional_fd_error(mortar, x, dir));

        const BeamModel beam(KnotVector::open_uniform(3, 6, 0.0, 1.0), BeamSection{1000.0, 0.3, 0.1}, Eigen::Vector3d::Zero());
        CantileverProblem cant(beam, Eigen::Vector3d(0.1, 0.0, 0.0), Eigen::Vector3d(0.05, 0.02, 0.0));
        const Eigen::VectorXd xb = cant.pack(beam.reference_state()) + 0.05 * random_vector(cant.num_unknowns(), 1.0, rng);
        record("cantilever", directional_fd_error(cant, xb, random_vector(cant.num_unknowns(), 1.0, rng)));

        EmbeddedProblem cond(es.matrix, es.dirichlet, es.fiber, cfg.tip_moment);
        FullEmbeddedProblem full(es.matrix, es.dirichlet, es.fiber, cfg.tip_moment);
        auto free_dir = [&](Eigen::Index n) {
            Eigen::VectorXd v = random_vector(n, 1.0, rng);
            for (Eigen::Index i = 0; i < es.matrix.num_dofs(); ++i) {
                if (es.dirichlet.fixed[static_cast<std::size_t>(i)]) v[i] = 0.0;
            }
            return v;
        };
        const Eigen::VectorXd xc = cond.initial_state() + 0.02 * free_dir(cond.num_unknowns());
        record("condensed embedded", directional_fd_error(cond, xc, free_dir(cond.num_unknowns())));
        const Eigen::VectorXd xf = full.initial_state() + 0.02 * free_dir(full.num_unknowns());
        record("full embedded", directional_fd_error(full, xf, free_dir(full.num_unknowns())));
    }
    return {saddle < 1e-10 && embedded < 1e-9 && fd < 1e-6,
            "mortar condensed vs saddle " + sci(saddle) + ", embedded condensed vs full " + sci(embedded) +
                ", worst tangent FD error " + sci(fd) + " (" + fd_worst + ")"};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        std::string name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "crosspoint matrices", criterion1},
        {2, "dual basis biorthogonality and partition of unity", criterion2},
        {3, "optimal dual basis reproduces polynomials", criterion3},
        {4, "patch test", [] { return scenario_outcome("patch_test.json"); }},
        {5, "mortar convergence rates", [] { return scenario_outcome("mortar_convergence.json"); }},
        {6, "beam cantilever", [] { return scenario_outcome("beam_cantilever.json"); }},
        {7, "embedded beam", [] { return scenario_outcome("embedded_beam.json"); }},
        {8, "condensed vs saddle solves and tangents", criterion8},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    int failures = 0;
    int ran = 0;
    for (const Criterion& c : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.passed) ++failures;
        std::cout << (o.passed ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << o.detail << std::endl;
    }
    std::cout << (ran - failures) << "/" << ran << " criteria passed"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
