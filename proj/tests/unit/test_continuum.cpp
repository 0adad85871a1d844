#include "miga/continuum.hpp"
#include "miga/errors.hpp"
#include "miga/newton.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace miga;

namespace {

Material svk(double E = 100.0, double nu = 0.3) {
    return {MaterialKind::SaintVenantKirchhoff, E, nu};
}

Eigen::Matrix3d random_F(std::mt19937& rng, double amp) {
    std::uniform_real_distribution<double> U(-amp, amp);
    Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) F(i, j) += U(rng);
    }
    return F;
}

// Bilinear-ish distorted quadrilateral described as a biquadratic patch.
Patch distorted_patch(int elems) {
    Patch box = Patch::box({2, 2}, {elems, elems}, {0, 0}, {1, 1});
    Eigen::MatrixXd cp = box.control_points();
    for (int A = 0; A < cp.rows(); ++A) {
        const double x = cp(A, 0);
        const double y = cp(A, 1);
        cp(A, 0) = x + 0.1 * y * y;
        cp(A, 1) = y + 0.15 * x * y;
    }
    return Patch(box.spaces(), cp);
}

Eigen::VectorXd random_vector(int n, double amp, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-amp, amp);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = U(rng);
    return v;
}

void expect_tangent_matches_fd(const ContinuumModel& m, const Eigen::VectorXd& u) {
    Eigen::VectorXd r0;
    SpMat K;
    m.assemble(u, &r0, &K);
    const Eigen::MatrixXd Kd(K);
    const double h = 1e-6;
    double worst = 0.0;
    for (int j = 0; j < m.num_dofs(); ++j) {
        Eigen::VectorXd up = u;
        Eigen::VectorXd um = u;
        up[j] += h;
        um[j] -= h;
        Eigen::VectorXd rp;
        Eigen::VectorXd rm;
        m.assemble(up, &rp, nullptr);
        m.assemble(um, &rm, nullptr);
        const Eigen::VectorXd col = (rp - rm) / (2 * h);
        worst = std::max(worst, (col - Kd.col(j)).norm() / std::max(1.0, Kd.col(j).norm()));
    }
    EXPECT_LT(worst, 1e-6);
    EXPECT_LT((Kd - Kd.transpose()).norm(), 1e-10 * Kd.norm());
}

Eigen::VectorXd solve_eliminated(const ContinuumModel& m, const DirichletSet& bc, const Eigen::VectorXd& fext,
                                 const ScalarField* src = nullptr) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m.num_dofs());
    bc.impose(u);
    Eigen::VectorXd r;
    SpMat K;
    m.assemble(u, &r, &K, src);
    r -= fext;
    for (int i = 0; i < m.num_dofs(); ++i) {
        if (bc.fixed[static_cast<std::size_t>(i)]) r[i] = 0.0;
    }
    constrain_rows_cols(K, bc.fixed);
    u += sparse_lu_solve(K, -r).col(0);
    return u;
}

}  // namespace

TEST(Svk, IdentityIsStressFree) {
    const SvkResponse r = svk_stress(svk(), Eigen::Matrix3d::Identity());
    EXPECT_LT(r.P.norm(), 1e-14);
    EXPECT_EQ(r.psi, 0.0);
}

TEST(Svk, UniaxialStretchClosedForm) {
    const Material m = svk(210.0, 0.0);
    for (double lam : {0.8, 1.0, 1.1, 1.5}) {
        Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
        F(0, 0) = lam;
        const SvkResponse r = svk_stress(m, F);
        EXPECT_NEAR(r.P(0, 0), lam * 210.0 * (lam * lam - 1) / 2, 1e-12 * 210.0);
        EXPECT_NEAR(r.P(1, 1), 0.0, 1e-12);
    }
}

TEST(Svk, InversionThrowsWithElement) {
    Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
    F(2, 2) = -0.5;
    try {
        (void)svk_stress(svk(), F, 17);
        FAIL();
    } catch (const ElementInversionError& e) {
        EXPECT_EQ(e.element(), 17);
    }
}

TEST(Svk, StressIsEnergyDerivative) {
    std::mt19937 rng(3);
    const Material m = svk(50.0, 0.25);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Matrix3d F = random_F(rng, 0.2);
        const Eigen::Matrix3d P = svk_stress(m, F).P;
        const double h = 1e-6;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                Eigen::Matrix3d Fp = F;
                Eigen::Matrix3d Fm = F;
                Fp(i, j) += h;
                Fm(i, j) -= h;
                const double d = (svk_stress(m, Fp).psi - svk_stress(m, Fm).psi) / (2 * h);
                EXPECT_NEAR(d, P(i, j), 1e-7 * std::max(1.0, P.norm()));
            }
        }
    }
}

TEST(Svk, TangentMatchesFiniteDifference) {
    std::mt19937 rng(5);
    const Material m = svk(50.0, 0.25);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Matrix3d F = random_F(rng, 0.3);
        const Eigen::Matrix<double, 9, 9> A = svk_tangent(m, F);
        const double h = 1e-6;
        for (int k = 0; k < 3; ++k) {
            for (int L = 0; L < 3; ++L) {
                Eigen::Matrix3d Fp = F;
                Eigen::Matrix3d Fm = F;
                Fp(k, L) += h;
                Fm(k, L) -= h;
                const Eigen::Matrix3d dP = (svk_stress(m, Fp).P - svk_stress(m, Fm).P) / (2 * h);
                for (int i = 0; i < 3; ++i) {
                    for (int J = 0; J < 3; ++J) EXPECT_NEAR(A(3 * i + J, 3 * k + L), dP(i, J), 1e-6 * A.norm());
                }
            }
        }
        EXPECT_LT((A - A.transpose()).norm(), 1e-12 * A.norm());
    }
}

TEST(Svk, FrameIndifference) {
    std::mt19937 rng(7);
    const Material m = svk(10.0, 0.2);
    const Eigen::Matrix3d Q = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, -1).normalized()).toRotationMatrix();
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Matrix3d F = random_F(rng, 0.3);
        const SvkResponse a = svk_stress(m, F);
        const SvkResponse b = svk_stress(m, Q * F);
        EXPECT_NEAR(a.psi, b.psi, 1e-12 * std::max(1.0, a.psi));
        EXPECT_LT((Q * a.P - b.P).norm(), 1e-12 * std::max(1.0, a.P.norm()));
    }
}

TEST(Material, ValidationRejectsBadParameters) {
    EXPECT_THROW(Material({MaterialKind::Poisson, -1.0, 0.0}).validate(), ConfigurationError);
    EXPECT_THROW(Material({MaterialKind::SaintVenantKirchhoff, 1.0, 0.5}).validate(), ConfigurationError);
    EXPECT_NO_THROW(Material({MaterialKind::SaintVenantKirchhoff, 1.0, 0.0}).validate());
}

TEST(Continuum, SvkResidualTangentConsistency2D) {
    const ContinuumModel m({distorted_patch(2)}, svk(20.0, 0.3));
    expect_tangent_matches_fd(m, random_vector(m.num_dofs(), 0.05, 11));
}

TEST(Continuum, SvkResidualTangentConsistency3D) {
    const ContinuumModel m({Patch::box({2, 1, 2}, {1, 2, 1}, {0, 0, 0}, {1, 1, 2})}, svk(20.0, 0.3));
    expect_tangent_matches_fd(m, random_vector(m.num_dofs(), 0.05, 13));
}

TEST(Continuum, PoissonResidualTangentConsistency) {
    const ContinuumModel m({distorted_patch(2)}, Material{});
    expect_tangent_matches_fd(m, random_vector(m.num_dofs(), 1.0, 17));
}

TEST(Continuum, ResidualIsEnergyGradient) {
    const ContinuumModel m({distorted_patch(2)}, svk(20.0, 0.3));
    const Eigen::VectorXd u = random_vector(m.num_dofs(), 0.05, 19);
    Eigen::VectorXd r;
    m.assemble(u, &r, nullptr);
    const double h = 1e-6;
    for (int j = 0; j < m.num_dofs(); j += 3) {
        Eigen::VectorXd up = u;
        Eigen::VectorXd um = u;
        up[j] += h;
        um[j] -= h;
        EXPECT_NEAR((m.energy(up) - m.energy(um)) / (2 * h), r[j], 1e-7 * std::max(1.0, r.norm()));
    }
}

TEST(Continuum, LinearElasticityEqualsSvkTangentAtRest) {
    const Patch p = distorted_patch(2);
    const ContinuumModel lin({p}, {MaterialKind::LinearElasticPlaneStrain, 20.0, 0.3});
    const ContinuumModel nl({p}, svk(20.0, 0.3));
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(lin.num_dofs());
    SpMat Kl;
    SpMat Kn;
    lin.assemble(u0, nullptr, &Kl);
    nl.assemble(u0, nullptr, &Kn);
    EXPECT_LT(Eigen::MatrixXd(Kl - Kn).norm(), 1e-12 * Eigen::MatrixXd(Kl).norm());
}

TEST(Continuum, RigidTranslationIsStressFree) {
    const ContinuumModel m({distorted_patch(2)}, svk(20.0, 0.3));
    Eigen::VectorXd u(m.num_dofs());
    for (int A = 0; A < m.patch(0).num_basis(); ++A) {
        u[m.dof(0, A, 0)] = 0.3;
        u[m.dof(0, A, 1)] = -1.2;
    }
    Eigen::VectorXd r;
    m.assemble(u, &r, nullptr);
    EXPECT_LT(r.norm(), 1e-12);
}

TEST(Continuum, ThreadedAssemblyMatchesSerial) {
    ContinuumModel m({Patch::box({2, 2}, {4, 3}, {0, 0}, {2, 1})}, svk(20.0, 0.3));
    const Eigen::VectorXd u = random_vector(m.num_dofs(), 0.02, 23);
    Eigen::VectorXd r1;
    Eigen::VectorXd r4;
    SpMat K1;
    SpMat K4;
    m.assemble(u, &r1, &K1);
    m.set_threads(4);
    m.assemble(u, &r4, &K4);
    EXPECT_LT((r1 - r4).norm(), 1e-13 * r1.norm());
    EXPECT_LT(Eigen::MatrixXd(K1 - K4).norm(), 1e-13 * Eigen::MatrixXd(K1).norm());
}

TEST(Neumann, ConstantTractionResultant) {
    const Patch p = distorted_patch(3);
    const ContinuumModel m({p}, {MaterialKind::LinearElasticPlaneStrain, 1.0, 0.0});
    // Chord of the curved side xi_0 = 1, from (1, 0) to (1.1, 1.15).
    const double len = std::hypot(0.1, 1.15);
    for (int side = 0; side < 4; ++side) {
        std::vector<NeumannBC> bcs{{0, side, [](const Eigen::VectorXd&) { return Eigen::Vector2d(2.0, -3.0).eval(); }}};
        const Eigen::VectorXd f = assemble_neumann(m, bcs);
        double fx = 0.0;
        double fy = 0.0;
        for (int A = 0; A < p.num_basis(); ++A) {
            fx += f[m.dof(0, A, 0)];
            fy += f[m.dof(0, A, 1)];
        }
        double length = 0.0;
        for (const FacePoint& fp : face_quadrature(p, side, 4)) length += fp.weight;
        EXPECT_NEAR(fx, 2.0 * length, 1e-12);
        EXPECT_NEAR(fy, -3.0 * length, 1e-12);
        if (side == 1) EXPECT_GT(length, len);
    }
}

TEST(Neumann, LinearTractionResultantOnBox) {
    const Patch p = Patch::box({2, 2}, {3, 2}, {0, 0}, {2, 1});
    const ContinuumModel m({p}, {MaterialKind::LinearElasticPlaneStrain, 1.0, 0.0});
    // Upper side in direction 1 is y = 1, x in [0, 2]; traction (x, 0) integrates to 2.
    std::vector<NeumannBC> bcs{{0, 3, [](const Eigen::VectorXd& x) { return Eigen::Vector2d(x[0], 0.0).eval(); }}};
    const Eigen::VectorXd f = assemble_neumann(m, bcs);
    double fx = 0.0;
    double moment = 0.0;
    for (int A = 0; A < p.num_basis(); ++A) {
        fx += f[m.dof(0, A, 0)];
        moment += f[m.dof(0, A, 0)] * p.control_points()(A, 0);
    }
    EXPECT_NEAR(fx, 2.0, 1e-12);
    // Greville control points reproduce x, so sum f_A x_A = int x * x = 8/3.
    EXPECT_NEAR(moment, 8.0 / 3.0, 1e-12);
}

TEST(Neumann, FaceNormalsPointOutward) {
    const Patch p = distorted_patch(2);
    for (int side = 0; side < 4; ++side) {
        for (const FacePoint& fp : face_quadrature(p, side)) {
            EXPECT_NEAR(fp.normal.norm(), 1.0, 1e-14);
            // Outward: moving against the normal enters the patch.
            const Eigen::VectorXd x = p.map_point(std::span<const double>(fp.xi.data(), 2));
            const Eigen::VectorXd centre = p.map_point(std::vector<double>{0.5, 0.5});
            EXPECT_GT(fp.normal.dot(x - centre), 0.0);
        }
    }
}

TEST(Dirichlet, LinearDataIsReproducedExactly) {
    const Patch p = Patch::box({2, 3}, {3, 2}, {0, 0}, {1, 2});
    const ContinuumModel m({p}, {MaterialKind::LinearElasticPlaneStrain, 1.0, 0.0});
    auto lin = [](const Eigen::VectorXd& x) { return Eigen::Vector2d(0.1 + 0.2 * x[0] - 0.3 * x[1], -0.4 + 0.5 * x[1]).eval(); };
    std::vector<DirichletBC> bcs;
    for (int s = 0; s < 4; ++s) bcs.push_back({0, s, {}, lin});
    const DirichletSet set = interpolate_dirichlet(m, bcs);
    for (int s = 0; s < 4; ++s) {
        for (int A : p.side_indices(s)) {
            const Eigen::Vector2d v = lin(p.control_points().row(A).transpose());
            EXPECT_TRUE(set.fixed[static_cast<std::size_t>(m.dof(0, A, 0))]);
            EXPECT_NEAR(set.values[m.dof(0, A, 0)], v[0], 1e-13);
            EXPECT_NEAR(set.values[m.dof(0, A, 1)], v[1], 1e-13);
        }
    }
}

TEST(Dirichlet, ConflictingValuesThrow) {
    const Patch p = Patch::box({1, 1}, {2, 2}, {0, 0}, {1, 1});
    const ContinuumModel m({p}, Material{});
    auto zero = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1).eval(); };
    auto one = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1).eval(); };
    EXPECT_THROW((void)interpolate_dirichlet(m, {{0, 0, {}, zero}, {0, 2, {}, one}}), ConfigurationError);
    EXPECT_NO_THROW((void)interpolate_dirichlet(m, {{0, 0, {}, one}, {0, 2, {}, one}}));
}

TEST(Dirichlet, SingleComponentOnly) {
    const Patch p = Patch::box({1, 1}, {2, 2}, {0, 0}, {1, 1});
    const ContinuumModel m({p}, {MaterialKind::LinearElasticPlaneStrain, 1.0, 0.0});
    auto g = [](const Eigen::VectorXd&) { return Eigen::Vector2d(1.0, 2.0).eval(); };
    const DirichletSet set = interpolate_dirichlet(m, {{0, 0, {1}, g}});
    EXPECT_EQ(set.count(), 3);
    for (int A : p.side_indices(0)) {
        EXPECT_FALSE(set.fixed[static_cast<std::size_t>(m.dof(0, A, 0))]);
        EXPECT_EQ(set.values[m.dof(0, A, 1)], 2.0);
    }
}

TEST(Continuum, LinearPatchTestSinglePatch) {
    const Patch p = distorted_patch(3);
    const ContinuumModel m({p}, {MaterialKind::LinearElasticPlaneStrain, 30.0, 0.3});
    auto lin = [](const Eigen::VectorXd& x) { return Eigen::Vector2d(0.01 * x[0] + 0.02 * x[1], -0.03 * x[0] + 0.005 * x[1]).eval(); };
    std::vector<DirichletBC> bcs;
    for (int s = 0; s < 4; ++s) bcs.push_back({0, s, {}, lin});
    const DirichletSet set = interpolate_dirichlet(m, bcs);
    const Eigen::VectorXd u = solve_eliminated(m, set, Eigen::VectorXd::Zero(m.num_dofs()));
    const Eigen::Matrix3d s0 = m.stress(u, 0, std::vector<double>{0.5, 0.5});
    for (double a : {0.1, 0.37, 0.9}) {
        for (double b : {0.05, 0.5, 0.77}) {
            const Eigen::Matrix3d s = m.stress(u, 0, std::vector<double>{a, b});
            EXPECT_LT((s - s0).norm(), 1e-10);
        }
    }
    const double lam = m.material().lame_lambda();
    const double mu = m.material().lame_mu();
    EXPECT_NEAR(s0(0, 0), lam * 0.015 + 2 * mu * 0.01, 1e-10);
    EXPECT_NEAR(s0(0, 1), mu * (0.02 - 0.03), 1e-10);
    EXPECT_NEAR(s0(2, 2), lam * 0.015, 1e-10);
}

TEST(Continuum, EliminationMatchesLagrangeEnforcement) {
    const Patch p = distorted_patch(3);
    const ContinuumModel m({p}, {MaterialKind::LinearElasticPlaneStrain, 30.0, 0.3});
    auto g = [](const Eigen::VectorXd& x) { return Eigen::Vector2d(0.01 * x[1] * x[1], 0.0).eval(); };
    const DirichletSet set = interpolate_dirichlet(m, {{0, 0, {}, g}});
    std::vector<NeumannBC> nbc{{0, 1, [](const Eigen::VectorXd& x) { return Eigen::Vector2d(0.5, -0.2 * x[1]).eval(); }}};
    const Eigen::VectorXd fext = assemble_neumann(m, nbc);
    const Eigen::VectorXd ue = solve_eliminated(m, set, fext);

    SpMat K;
    Eigen::VectorXd r;
    m.assemble(Eigen::VectorXd::Zero(m.num_dofs()), &r, &K);
    Triplets tr;
    Eigen::VectorXd gv(set.count());
    int row = 0;
    for (int i = 0; i < m.num_dofs(); ++i) {
        if (!set.fixed[static_cast<std::size_t>(i)]) continue;
        tr.emplace_back(row, i, 1.0);
        gv[row++] = set.values[i];
    }
    SpMat B(set.count(), m.num_dofs());
    B.setFromTriplets(tr.begin(), tr.end());
    const SaddleSolution sol = solve_saddle(K, B, fext, gv);
    EXPECT_LT((sol.x - ue).norm(), 1e-10 * std::max(1.0, ue.norm()));
}

TEST(Continuum, PoissonQuadraticIsExactForQuadraticSplines) {
    const Patch p = Patch::box({2, 2}, {3, 3}, {0, 0}, {1, 1});
    const ContinuumModel m({p}, Material{});
    auto exact = [](const Eigen::VectorXd& x) { return (Eigen::VectorXd(1) << x[0] * x[0] + 2 * x[1] * x[1]).finished(); };
    std::vector<DirichletBC> bcs;
    for (int s = 0; s < 4; ++s) bcs.push_back({0, s, {}, exact});
    const ScalarField src = [](const Eigen::VectorXd&) { return -6.0; };
    const Eigen::VectorXd u = solve_eliminated(m, interpolate_dirichlet(m, bcs), Eigen::VectorXd::Zero(m.num_dofs()), &src);
    const Eigen::MatrixXd c = m.patch_coefficients(u, 0);
    for (double a : {0.13, 0.5, 0.91}) {
        for (double b : {0.2, 0.66}) {
            const std::vector<double> xi{a, b};
            EXPECT_NEAR(field_value(p, c, xi)[0], a * a + 2 * b * b, 1e-12);
        }
    }
}

TEST(Continuum, VonMisesOfUniaxialStress) {
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    s(0, 0) = 7.0;
    EXPECT_NEAR(von_mises(s), 7.0, 1e-14);
    EXPECT_NEAR(von_mises(Eigen::Matrix3d::Identity() * 3.0), 0.0, 1e-14);
}
