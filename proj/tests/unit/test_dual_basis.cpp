#include "miga/dual_basis.hpp"
#include "miga/errors.hpp"
#include "miga/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace miga;

namespace {

KnotVector random_open(int p, int elements, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.3, 1.0);
    std::vector<double> k(static_cast<std::size_t>(p + 1), 0.0);
    double x = 0.0;
    for (int e = 0; e < elements; ++e) {
        x += u(rng);
        k.push_back(x);
    }
    for (int i = 0; i < p; ++i) k.push_back(x);
    return KnotVector(k, p);
}

// Brute-force integral of psi_i * phi_j with a fine composite Gauss rule, independent of the
// element-matrix path used by the library.
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

// Least-squares residual of projecting f onto span(basis), sampled densely.
double span_residual(const PiecewiseBasis& basis, const std::function<double(double)>& f) {
    const KnotVector& kv = basis.trace();
    std::vector<double> xs;
    const auto bp = kv.breakpoints();
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

}  // namespace

TEST(Step1, LinearSingleElementByHand) {
    const KnotVector kv({0, 0, 1, 1}, 1);
    const DualBasis d = step1_elementwise_dual(kv);
    // psi_1 = 2 - 3 xi, psi_2 = 3 xi - 1
    for (double x : {0.0, 0.2, 0.7, 1.0}) {
        const Eigen::VectorXd v = d.basis.eval(x);
        EXPECT_NEAR(v[0], 2 - 3 * x, 1e-14);
        EXPECT_NEAR(v[1], 3 * x - 1, 1e-14);
    }
    EXPECT_NEAR(d.basis.monomial_coefficients(0, 0)[0], 2.0, 1e-13);
    EXPECT_NEAR(d.basis.monomial_coefficients(0, 0)[1], -3.0, 1e-13);
}

TEST(Step1, LocalSystemSize) {
    const KnotVector kv = KnotVector::open_uniform(2, 4);
    const DualBasis d = step1_elementwise_dual(kv);
    EXPECT_EQ(d.basis.size(), 4 * 3);
    for (const auto& pc : d.basis.pieces()) EXPECT_EQ(pc.coeffs.rows(), 3);
}

TEST(Step1, ElementwiseBiorthogonality) {
    std::mt19937 rng(21);
    for (int p = 1; p <= 3; ++p) {
        const KnotVector kv = random_open(p, 6, rng);
        const DualBasis d = step1_elementwise_dual(kv);
        const PiecewiseBasis phi = standard_basis(kv);
        // On each element: integral_e phi_{i,e} psi_{j,e} = delta_ij integral_e phi_{i,e}
        for (std::size_t e = 0; e < d.basis.pieces().size(); ++e) {
            const auto& pc = d.basis.pieces()[e];
            const double a = kv[static_cast<std::size_t>(pc.span)];
            const double b = kv[static_cast<std::size_t>(pc.span + 1)];
            const QuadratureRule q = gauss_legendre(p + 2, a, b);
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p + 1, p + 1);
            Eigen::VectorXd ints = Eigen::VectorXd::Zero(p + 1);
            for (std::size_t g = 0; g < q.points.size(); ++g) {
                const Eigen::VectorXd psi = d.basis.eval_on(static_cast<int>(e), q.points[g]);
                const Eigen::VectorXd N = phi.eval_on(static_cast<int>(e), q.points[g]);
                m += q.weights[g] * psi * N.transpose();
                ints += q.weights[g] * N;
            }
            EXPECT_LT((m - Eigen::MatrixXd(ints.asDiagonal())).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(Step2, ClassicalDualHats) {
    const KnotVector kv = KnotVector::open_uniform(1, 4);
    const DualBasis d = make_dual_basis(kv, DualStage::Glued);
    EXPECT_EQ(d.basis.size(), kv.num_basis());
    const Eigen::MatrixXd bc = brute_force_bc(d.basis, kv);
    const Eigen::VectorXd ints = integrals(standard_basis(kv));
    EXPECT_LT((bc - Eigen::MatrixXd(ints.asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
    // Interior dual hat: 2 at its own node, -1 at the neighbours, discontinuous at element ends.
    const double h = 0.25;
    EXPECT_NEAR(d.basis.eval(0.5)[2], 2.0, 1e-13);
    EXPECT_NEAR(d.basis.eval(0.5 - h + 1e-12)[2], -1.0, 1e-9);
}

TEST(Step2, BiorthogonalityAndPartitionOfUnityOnRandomKnots) {
    std::mt19937 rng(31);
    for (int p = 1; p <= 3; ++p) {
        for (int trial = 0; trial < 10; ++trial) {
            const KnotVector kv = random_open(p, 5 + trial, rng);
            const DualBasis d = make_dual_basis(kv, DualStage::Glued);
            const Eigen::MatrixXd bc = brute_force_bc(d.basis, kv);
            const Eigen::VectorXd ints = integrals(standard_basis(kv));
            EXPECT_LT((bc - Eigen::MatrixXd(ints.asDiagonal())).cwiseAbs().maxCoeff(), 1e-10);
            std::uniform_real_distribution<double> u(kv.lower(), kv.upper());
            for (int s = 0; s < 200; ++s) EXPECT_NEAR(d.basis.eval(u(rng)).sum(), 1.0, 1e-12);
            for (int i = 0; i < d.basis.size(); ++i) EXPECT_LE(d.basis.support(i).size(), static_cast<std::size_t>(p + 1));
        }
    }
}

TEST(Step3, LinearIsUnchanged) {
    const KnotVector kv = KnotVector::open_uniform(1, 6);
    const DualBasis g = make_dual_basis(kv, DualStage::Glued);
    const DualBasis o = step3_optimal(g, kv);
    EXPECT_EQ(o.stage, DualStage::Optimal);
    for (std::size_t e = 0; e < g.basis.pieces().size(); ++e) {
        EXPECT_EQ(o.basis.pieces()[e].coeffs, g.basis.pieces()[e].coeffs);
    }
}

TEST(Step3, ReproducesPolynomialsAndKeepsBiorthogonality) {
    for (int p = 2; p <= 3; ++p) {
        const KnotVector kv = KnotVector::open_uniform(p, 10);
        const DualBasis o = make_dual_basis(kv, DualStage::Optimal);
        for (int k = 0; k <= p; ++k) {
            EXPECT_LT(span_residual(o.basis, [k](double x) { return std::pow(x, k); }), 1e-9) << "p=" << p << " k=" << k;
        }
        const Eigen::MatrixXd bc = brute_force_bc(o.basis, kv);
        const Eigen::VectorXd ints = integrals(standard_basis(kv));
        EXPECT_LT((bc - Eigen::MatrixXd(ints.asDiagonal())).cwiseAbs().maxCoeff(), 1e-10);
        for (int i = 0; i < o.basis.size(); ++i) EXPECT_LE(o.basis.support(i).size(), static_cast<std::size_t>(2 * p + 1));
    }
}

TEST(Step3, GluedDualDoesNotReproduceLinears) {
    const KnotVector kv = KnotVector::open_uniform(2, 10);
    const DualBasis g = make_dual_basis(kv, DualStage::Glued);
    EXPECT_GT(span_residual(g.basis, [](double x) { return x; }), 1e-4);
}

TEST(Step3, NonUniformMeshAlsoReproduces) {
    std::mt19937 rng(41);
    const KnotVector kv = random_open(3, 9, rng);
    const DualBasis o = make_dual_basis(kv, DualStage::Optimal);
    for (int k = 0; k <= 3; ++k) EXPECT_LT(span_residual(o.basis, [k](double x) { return std::pow(x, k); }), 1e-9);
}

TEST(Crosspoint, TabulatedMatrices) {
    const CrosspointModification a = crosspoint_matrix(2, 1);
    EXPECT_NEAR(a.C(0, 0), 1.5, 1e-12);
    EXPECT_NEAR(a.C(1, 0), -0.5, 1e-12);

    const CrosspointModification b = crosspoint_matrix(2, 2);
    Eigen::Matrix2d eb;
    eb << 2.5, 2, -1.5, -1;
    EXPECT_LT((b.C - eb).cwiseAbs().maxCoeff(), 1e-12);

    const CrosspointModification c = crosspoint_matrix(3, 3);
    Eigen::Matrix3d ec;
    ec << 37.0 / 6, 5, 3, -25.0 / 3, -19.0 / 3, -3, 19.0 / 6, 7.0 / 3, 1;
    EXPECT_LT((c.C - ec).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Crosspoint, UnsupportedCombinations) {
    EXPECT_THROW((void)crosspoint_matrix(2, 3), UnsupportedInputError);
    EXPECT_THROW((void)crosspoint_matrix(2, 0), UnsupportedInputError);
}

TEST(Crosspoint, ModificationProperties) {
    for (int p = 1; p <= 3; ++p) {
        const KnotVector kv = KnotVector::open_uniform(p, 8);
        const PiecewiseBasis phi = standard_basis(kv);
        const CrosspointModification cm = crosspoint_matrix(p, 1);
        const PiecewiseBasis left = apply_crosspoint_modification(phi, cm, End::Left);
        const PiecewiseBasis both = apply_crosspoint_modification(left, cm, End::Right);
        EXPECT_EQ(left.size(), phi.size() - 1);
        EXPECT_EQ(both.size(), phi.size() - 2);
        const Eigen::MatrixXd gram = coupling_matrix(both, both);
        EXPECT_GT(gram.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff(), 1e-10);
        EXPECT_LT(span_residual(both, [](double) { return 1.0; }), 1e-10);
        for (int k = 0; k < p; ++k) {
            EXPECT_LT(span_residual(both, [k](double x) { return std::pow(x, k); }), 1e-10);
        }
    }
}

TEST(Crosspoint, TooFewFunctions) {
    const KnotVector kv = KnotVector::open_uniform(3, 1);
    EXPECT_THROW((void)apply_crosspoint_modification(standard_basis(kv), crosspoint_matrix(3, 3), End::Left), DomainError);
}

TEST(Crosspoint, DualModificationKeepsInteriorDiagonalAndReproduction) {
    for (int p = 2; p <= 3; ++p) {
        const KnotVector kv = KnotVector::open_uniform(p, 10);
        const DualBasis o = make_dual_basis(kv, DualStage::Optimal);
        PiecewiseBasis m = apply_crosspoint_modification(o.basis, dual_crosspoint_matrix(o.basis, 1, End::Left), End::Left);
        m = apply_crosspoint_modification(m, dual_crosspoint_matrix(o.basis, 1, End::Right), End::Right);
        const Eigen::MatrixXd M = coupling_matrix(m, standard_basis(kv));
        // Multiplier i pairs with trace function i+1.
        const Eigen::MatrixXd inner = M.middleCols(1, m.size());
        const Eigen::MatrixXd off = inner - Eigen::MatrixXd(inner.diagonal().asDiagonal());
        EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-12 * inner.diagonal().cwiseAbs().maxCoeff());
        for (int k = 0; k < p; ++k) {
            EXPECT_LT(span_residual(m, [k](double x) { return std::pow(x, k); }), 1e-9);
        }
    }
}
