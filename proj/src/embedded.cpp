#include "miga/embedded.hpp"

#include "miga/errors.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace miga {

// ============================================================================
// Embedding
// ============================================================================

FiberEmbedding::FiberEmbedding(const ContinuumModel& matrix, int patch, BeamModel beam, double spring_compliance)
    : beam_(std::move(beam)), patch_(patch), ndof_(matrix.num_dofs()) {
    if (spring_compliance != 0.0) throw ConfigurationError("embedding: only rigid coupling (spring compliance 0) is supported");
    if (patch < 0 || patch >= static_cast<int>(matrix.patches().size())) throw ConfigurationError("embedding: host patch does not exist");
    const Patch& host = matrix.patch(patch);
    if (host.dim() != 3 || host.sdim() != 3 || matrix.ncomp() != 3) {
        throw ConfigurationError("embedding: host must be a 3D solid patch");
    }
    const int nb = beam_.num_basis();
    std::vector<double> guess(3);
    for (int d = 0; d < 3; ++d) {
        const KnotVector& kv = host.space(d).knots();
        guess[static_cast<std::size_t>(d)] = 0.5 * (kv.lower() + kv.upper());
    }
    Triplets t;
    for (const PointBasis& b : beam_.points()) {
        const Eigen::Vector3d X = beam_.reference_position(b.s);
        try {
            guess = host.invert_point(X, guess);
        } catch (const InversionError&) {
            std::ostringstream os;
            os << "embedding: centerline point s = " << b.s << " at (" << X.transpose() << ") lies outside patch " << patch;
            throw EmbeddingError(os.str(), b.s);
        }
        const int k = static_cast<int>(centerline_.size());
        centerline_.push_back(X);
        xi_.push_back({guess[0], guess[1], guess[2]});
        const PointData pd = host.evaluate(guess, false);
        for (std::size_t a = 0; a < pd.indices.size(); ++a) {
            if (pd.R[static_cast<Eigen::Index>(a)] == 0.0) continue;
            for (int c = 0; c < 3; ++c) {
                t.emplace_back(3 * k + c, matrix.dof(patch, static_cast<int>(pd.indices[a]), c), pd.R[static_cast<Eigen::Index>(a)]);
            }
        }
    }
    E_.resize(3 * nb, ndof_);
    E_.setFromTriplets(t.begin(), t.end());
    for (int c = 0; c < E_.outerSize(); ++c) {
        if (SpMat::InnerIterator(E_, c)) coupled_.push_back(c);
    }

    P_ = beam_.collocation().partialPivLu().inverse();
    const KnotVector& kv = beam_.knots();
    const int p = kv.degree();
    Eigen::VectorXd integrals(nb);
    for (int i = 0; i < nb; ++i) {
        integrals[i] = (kv[static_cast<std::size_t>(i + p + 1)] - kv[static_cast<std::size_t>(i)]) / (p + 1);
    }
    w_ = P_.transpose() * integrals;

    Lambda_ = Eigen::MatrixXd::Zero(3 * nb, 3 * nb);
    for (int k = 0; k < nb; ++k) {
        const PointBasis& b = beam_.points()[static_cast<std::size_t>(k)];
        for (Eigen::Index i = 0; i < b.N0.size(); ++i) {
            double v = -w_[k] * b.N1[i];
            if (k == 0) v -= b.N0[i];
            if (k == nb - 1) v += b.N0[i];
            const int col = 3 * (b.first + static_cast<int>(i));
            for (int c = 0; c < 3; ++c) Lambda_(3 * k + c, col + c) += v;
        }
    }
}

Eigen::VectorXd FiberEmbedding::matrix_positions(const Eigen::VectorXd& u) const {
    Eigen::VectorXd x = E_ * u;
    for (int k = 0; k < num_points(); ++k) x.segment<3>(3 * k) += centerline_[static_cast<std::size_t>(k)];
    return x;
}

Eigen::VectorXd FiberEmbedding::transfer_loads(const Eigen::VectorXd& lambda) const { return E_.transpose() * lambda; }

Eigen::MatrixXd FiberEmbedding::centerline_coefficients(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd x = matrix_positions(u);
    const Eigen::MatrixXd V = Eigen::Map<const Eigen::MatrixXd>(x.data(), 3, num_points()).transpose();
    return P_ * V;
}

Eigen::VectorXd FiberEmbedding::coupling_constraints(const Eigen::VectorXd& u, const Eigen::MatrixXd& phi) const {
    Eigen::VectorXd r = -matrix_positions(u);
    for (int k = 0; k < num_points(); ++k) {
        const PointBasis& b = beam_.points()[static_cast<std::size_t>(k)];
        for (Eigen::Index i = 0; i < b.N0.size(); ++i) {
            r.segment<3>(3 * k) += b.N0[i] * phi.row(b.first + static_cast<int>(i)).transpose();
        }
    }
    return r;
}

// ============================================================================
// Rod rows
// ============================================================================

FiberRows fiber_rows(const BeamModel& beam, const BeamCoefficients& c, const Eigen::Vector3d& tip_moment, bool jacobian) {
    const int nb = beam.num_basis();
    FiberRows out;
    out.r.resize(10 * nb);
    Triplets tphi;
    Triplets trest;
    const Eigen::MatrixXd I3 = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd Z3 = Eigen::MatrixXd::Zero(3, 3);
    auto scatter = [&](int row0, const Eigen::MatrixXd& d, const PointBasis& b) {
        scatter_field(tphi, row0, d.middleCols(pv::phi, 3), d.middleCols(pv::dphi, 3), b, 0, 3);
        scatter_field(trest, row0, d.middleCols(pv::q, 4), d.middleCols(pv::dq, 4), b, 0, 4);
        scatter_field(trest, row0, d.middleCols(pv::n, 3), d.middleCols(pv::dn, 3), b, 4 * nb, 3);
        scatter_field(trest, row0, d.middleCols(pv::m, 3), d.middleCols(pv::dm, 3), b, 7 * nb, 3);
    };
    for (int k = 0; k < nb; ++k) {
        const PointBasis& b = beam.points()[static_cast<std::size_t>(k)];
        const PointVariables z = beam.variables(c, b);
        const KernelResult ker = beam_kernel(beam.section(), beam.triad(), z);
        const int row = 10 * k;
        if (k == 0 || k == nb - 1) {
            out.r.segment<3>(row) = z.segment<3>(pv::m);
            if (k == nb - 1) {
                out.r.segment<3>(row) -= tip_moment;
                out.r[row + 2] -= ker.rows[kr::gauge];
            }
            if (jacobian) {
                scatter_field(trest, row, I3, Z3, b, 7 * nb, 3);
                if (k == nb - 1) scatter(row + 2, -ker.dz.row(kr::gauge), b);
            }
        } else {
            out.r.segment<3>(row) = ker.rows.segment<3>(kr::moment_balance);
            if (jacobian) scatter(row, ker.dz.middleRows(kr::moment_balance, 3), b);
        }
        out.r.segment<7>(row + 3) = ker.rows.segment<7>(kr::constitutive_n);
        if (jacobian) scatter(row + 3, ker.dz.middleRows(kr::constitutive_n, 7), b);
    }
    if (jacobian) {
        SpMat dphi(10 * nb, 3 * nb);
        dphi.setFromTriplets(tphi.begin(), tphi.end());
        out.d_phi = Eigen::MatrixXd(dphi);
        out.d_rest.resize(10 * nb, 10 * nb);
        out.d_rest.setFromTriplets(trest.begin(), trest.end());
    }
    return out;
}

namespace {

BeamCoefficients unpack_rest(const Eigen::VectorXd& y, int nb) {
    BeamCoefficients c;
    c.q = Eigen::Map<const Eigen::MatrixXd>(y.data(), 4, nb).transpose();
    c.n = Eigen::Map<const Eigen::MatrixXd>(y.data() + 4 * nb, 3, nb).transpose();
    c.m = Eigen::Map<const Eigen::MatrixXd>(y.data() + 7 * nb, 3, nb).transpose();
    return c;
}

Eigen::VectorXd reference_rest(int nb) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(10 * nb);
    for (int i = 0; i < nb; ++i) y[4 * i + 3] = 1.0;
    return y;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& rows) {
    const Eigen::MatrixXd t = rows.transpose();
    return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
}

Eigen::VectorXd matrix_residual(const ContinuumModel& matrix, const DirichletSet& dir, const FiberEmbedding& fiber,
                                const Eigen::VectorXd& u, const Eigen::VectorXd& lambda, const Eigen::VectorXd& fext,
                                double load) {
    Eigen::VectorXd r;
    matrix.assemble(u, &r, nullptr);
    r += fiber.transfer_loads(lambda) - load * fext;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (dir.fixed[static_cast<std::size_t>(i)]) r[i] = 0.0;
    }
    return r;
}

SpMat matrix_tangent(const ContinuumModel& matrix, const DirichletSet& dir, const Eigen::VectorXd& u) {
    SpMat K;
    matrix.assemble(u, nullptr, &K);
    constrain_rows_cols(K, dir.fixed);
    return K;
}

void check_inputs(const ContinuumModel& matrix, const DirichletSet& dir, const FiberEmbedding& fiber, Eigen::VectorXd& fext) {
    if (fiber.num_matrix_dofs() != matrix.num_dofs()) throw ConfigurationError("embedding: fiber was bound to a different matrix");
    if (static_cast<int>(dir.fixed.size()) != matrix.num_dofs()) throw ConfigurationError("embedding: Dirichlet data size mismatch");
    if (fext.size() == 0) fext = Eigen::VectorXd::Zero(matrix.num_dofs());
    if (fext.size() != matrix.num_dofs()) throw ConfigurationError("embedding: matrix load size mismatch");
}

void add_block(Triplets& t, const SpMat& M, int r0, int c0, double s = 1.0) {
    for (int c = 0; c < M.outerSize(); ++c) {
        for (SpMat::InnerIterator it(M, c); it; ++it) t.emplace_back(r0 + static_cast<int>(it.row()), c0 + c, s * it.value());
    }
}

void add_dense(Triplets& t, const Eigen::MatrixXd& M, int r0, int c0, double s = 1.0) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
        for (Eigen::Index r = 0; r < M.rows(); ++r) {
            if (M(r, c) != 0.0) t.emplace_back(r0 + static_cast<int>(r), c0 + static_cast<int>(c), s * M(r, c));
        }
    }
}

/// d(rod rows)/d(point positions) through the interpolating centerline.
Eigen::MatrixXd position_sensitivity(const Eigen::MatrixXd& d_phi, const Eigen::MatrixXd& P) {
    const Eigen::Index nb = P.rows();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d_phi.rows(), 3 * nb);
    for (int c = 0; c < 3; ++c) {
        Eigen::MatrixXd Dc(d_phi.rows(), nb);
        for (Eigen::Index i = 0; i < nb; ++i) Dc.col(i) = d_phi.col(3 * i + c);
        const Eigen::MatrixXd Hc = Dc * P;
        for (Eigen::Index k = 0; k < nb; ++k) H.col(3 * k + c) = Hc.col(k);
    }
    return H;
}

}  // namespace

// ============================================================================
// Condensed formulation
// ============================================================================

EmbeddedProblem::EmbeddedProblem(const ContinuumModel& matrix, DirichletSet dirichlet, FiberEmbedding fiber,
                                 Eigen::Vector3d tip_moment, Eigen::VectorXd matrix_load)
    : matrix_(&matrix), dirichlet_(std::move(dirichlet)), fiber_(std::move(fiber)), moment_(std::move(tip_moment)),
      fext_(std::move(matrix_load)) {
    check_inputs(matrix, dirichlet_, fiber_, fext_);
    ndof_ = matrix.num_dofs();
    nb_ = fiber_.num_points();
    E_free_ = fiber_.evaluation();
    constrain_cols(E_free_, dirichlet_.fixed);
}

Eigen::VectorXd EmbeddedProblem::initial_state() const {
    Eigen::VectorXd x(num_unknowns());
    Eigen::VectorXd u = Eigen::VectorXd::Zero(ndof_);
    dirichlet_.impose(u);
    x << u, reference_rest(nb_);
    return x;
}

BeamCoefficients EmbeddedProblem::rod(const Eigen::VectorXd& x) const {
    BeamCoefficients c = unpack_rest(x.tail(10 * nb_), nb_);
    c.phi = fiber_.centerline_coefficients(x.head(ndof_));
    return c;
}

Eigen::VectorXd EmbeddedProblem::multipliers(const Eigen::VectorXd& x) const {
    return fiber_.load_operator() * x.segment(ndof_ + 4 * nb_, 3 * nb_);
}

Eigen::VectorXd EmbeddedProblem::residual(const Eigen::VectorXd& x) {
    const Eigen::VectorXd u = x.head(ndof_);
    const BeamCoefficients c = rod(x);
    Eigen::VectorXd r(num_unknowns());
    r.head(ndof_) = matrix_residual(*matrix_, dirichlet_, fiber_, u, multipliers(x), fext_, load_);
    r.tail(10 * nb_) = fiber_rows(fiber_.beam(), c, load_ * moment_, false).r;
    return r;
}

EmbeddedProblem::Linearization EmbeddedProblem::linearize(const Eigen::VectorXd& x) const {
    Linearization lin;
    lin.K = matrix_tangent(*matrix_, dirichlet_, x.head(ndof_));
    lin.rows = fiber_rows(fiber_.beam(), rod(x), load_ * moment_, true);
    lin.H = position_sensitivity(lin.rows.d_phi, fiber_.interpolation());
    return lin;
}

SpMat EmbeddedProblem::jacobian(const Eigen::VectorXd& x) {
    const Linearization lin = linearize(x);
    Triplets t;
    add_block(t, lin.K, 0, 0);
    const SpMat C = (E_free_.transpose() * fiber_.load_operator()).sparseView();
    add_block(t, C, 0, ndof_ + 4 * nb_);
    const SpMat D = (lin.H * E_free_).sparseView();
    add_block(t, D, ndof_, 0);
    add_block(t, lin.rows.d_rest, ndof_, ndof_);
    SpMat J(num_unknowns(), num_unknowns());
    J.setFromTriplets(t.begin(), t.end());
    return J;
}

Eigen::VectorXd EmbeddedProblem::solve_step(const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
    if (!schur_) return NonlinearSystem::solve_step(x, r);
    const Linearization lin = linearize(x);
    chol_.factorize(lin.K);
    const int nl = 3 * nb_;
    const std::vector<int>& cols = fiber_.coupled_dofs();
    const auto nc = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd Ec = Eigen::MatrixXd::Zero(nl, nc);
    const Eigen::MatrixXd Ed(E_free_);
    for (Eigen::Index j = 0; j < nc; ++j) Ec.col(j) = Ed.col(cols[static_cast<std::size_t>(j)]);

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ndof_, 1 + nl);
    rhs.col(0) = r.head(ndof_);
    for (Eigen::Index j = 0; j < nc; ++j) rhs.row(cols[static_cast<std::size_t>(j)]).tail(nl) = Ec.col(j).transpose();
    const Eigen::MatrixXd sol = chol_.solve(rhs);

    Eigen::MatrixXd solc(nc, 1 + nl);
    for (Eigen::Index j = 0; j < nc; ++j) solc.row(j) = sol.row(cols[static_cast<std::size_t>(j)]);
    const Eigen::MatrixXd EY = Ec * solc.rightCols(nl);
    const Eigen::VectorXd Ev = Ec * solc.col(0);
    const Eigen::MatrixXd& Lambda = fiber_.load_operator();

    Eigen::MatrixXd S(lin.rows.d_rest);
    S.middleCols(4 * nb_, nl) -= lin.H * EY * Lambda;
    const Eigen::VectorXd rb = -r.tail(10 * nb_) + lin.H * Ev;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
    const Eigen::VectorXd dy = lu.solve(rb);
    const double res = (S * dy - rb).cwiseAbs().maxCoeff();
    if (!dy.allFinite() || res > 1e-8 * std::max(1.0, rb.cwiseAbs().maxCoeff())) {
        std::ostringstream os;
        os << "embedded Schur complement is singular (residual " << res << ")";
        throw SingularSystemError(os.str());
    }
    Eigen::VectorXd dx(num_unknowns());
    dx.head(ndof_) = -sol.col(0) - sol.rightCols(nl) * (Lambda * dy.segment(4 * nb_, nl));
    dx.tail(10 * nb_) = dy;
    return dx;
}

// ============================================================================
// Unreduced formulation
// ============================================================================

FullEmbeddedProblem::FullEmbeddedProblem(const ContinuumModel& matrix, DirichletSet dirichlet, FiberEmbedding fiber,
                                         Eigen::Vector3d tip_moment, Eigen::VectorXd matrix_load)
    : matrix_(&matrix), dirichlet_(std::move(dirichlet)), fiber_(std::move(fiber)), moment_(std::move(tip_moment)),
      fext_(std::move(matrix_load)) {
    check_inputs(matrix, dirichlet_, fiber_, fext_);
    ndof_ = matrix.num_dofs();
    nb_ = fiber_.num_points();
    E_free_ = fiber_.evaluation();
    constrain_cols(E_free_, dirichlet_.fixed);
}

Eigen::VectorXd FullEmbeddedProblem::initial_state() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(num_unknowns());
    Eigen::VectorXd u = Eigen::VectorXd::Zero(ndof_);
    dirichlet_.impose(u);
    x.head(ndof_) = u;
    x.segment(ndof_, 3 * nb_) = flatten(fiber_.centerline_coefficients(u));
    x.segment(ndof_ + 3 * nb_, 10 * nb_) = reference_rest(nb_);
    return x;
}

BeamCoefficients FullEmbeddedProblem::rod(const Eigen::VectorXd& x) const {
    BeamCoefficients c = unpack_rest(x.segment(ndof_ + 3 * nb_, 10 * nb_), nb_);
    c.phi = Eigen::Map<const Eigen::MatrixXd>(x.data() + ndof_, 3, nb_).transpose();
    return c;
}

Eigen::VectorXd FullEmbeddedProblem::condensed(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(ndof_ + 10 * nb_);
    y << x.head(ndof_), x.segment(ndof_ + 3 * nb_, 10 * nb_);
    return y;
}

Eigen::VectorXd FullEmbeddedProblem::residual(const Eigen::VectorXd& x) {
    const Eigen::VectorXd u = x.head(ndof_);
    const BeamCoefficients c = rod(x);
    const Eigen::VectorXd lambda = x.tail(3 * nb_);
    Eigen::VectorXd r(num_unknowns());
    r.head(ndof_) = matrix_residual(*matrix_, dirichlet_, fiber_, u, lambda, fext_, load_);
    r.segment(ndof_, 10 * nb_) = fiber_rows(fiber_.beam(), c, load_ * moment_, false).r;
    r.segment(ndof_ + 10 * nb_, 3 * nb_) = lambda - fiber_.load_operator() * x.segment(ndof_ + 7 * nb_, 3 * nb_);
    r.tail(3 * nb_) = fiber_.coupling_constraints(u, c.phi);
    return r;
}

SpMat FullEmbeddedProblem::jacobian(const Eigen::VectorXd& x) {
    const int o_phi = ndof_;
    const int o_rest = ndof_ + 3 * nb_;
    const int o_n = ndof_ + 7 * nb_;
    const int o_lambda = ndof_ + 13 * nb_;
    const FiberRows rows = fiber_rows(fiber_.beam(), rod(x), load_ * moment_, true);
    Triplets t;
    add_block(t, matrix_tangent(*matrix_, dirichlet_, x.head(ndof_)), 0, 0);
    add_block(t, SpMat(E_free_.transpose()), 0, o_lambda);
    add_dense(t, rows.d_phi, ndof_, o_phi);
    add_block(t, rows.d_rest, ndof_, o_rest);
    const int r_force = ndof_ + 10 * nb_;
    for (int i = 0; i < 3 * nb_; ++i) t.emplace_back(r_force + i, o_lambda + i, 1.0);
    add_dense(t, fiber_.load_operator(), r_force, o_n, -1.0);
    const int r_coupling = ndof_ + 13 * nb_;
    const Eigen::MatrixXd& A = fiber_.beam().collocation();
    for (Eigen::Index k = 0; k < A.rows(); ++k) {
        for (Eigen::Index i = 0; i < A.cols(); ++i) {
            if (A(k, i) == 0.0) continue;
            for (int c = 0; c < 3; ++c) t.emplace_back(r_coupling + 3 * static_cast<int>(k) + c, o_phi + 3 * static_cast<int>(i) + c, A(k, i));
        }
    }
    add_block(t, E_free_, r_coupling, 0, -1.0);
    SpMat J(num_unknowns(), num_unknowns());
    J.setFromTriplets(t.begin(), t.end());
    return J;
}

// ============================================================================
// Fiber-reinforced block
// ============================================================================

EmbeddedBeamSetup make_embedded_beam(const EmbeddedBeamConfig& cfg) {
    if (cfg.elements_xy < 1 || cfg.degree_xy < 1 || cfg.degree_z < 1) {
        throw ConfigurationError("embedded beam: element counts and degrees must be positive");
    }
    if (!(cfg.length > 0.0) || !(cfg.width > 0.0)) throw ConfigurationError("embedded beam: block dimensions must be positive");
    if (!(cfg.radius > 0.0) || 2.0 * cfg.radius >= cfg.width) throw ConfigurationError("embedded beam: fiber radius must fit inside the block");
    const int nz = std::max(1, static_cast<int>(std::lround(cfg.elements_xy * cfg.length / cfg.width)));
    Patch block = Patch::box({cfg.degree_xy, cfg.degree_xy, cfg.degree_z}, {cfg.elements_xy, cfg.elements_xy, nz},
                             {0.0, 0.0, 0.0}, {cfg.width, cfg.width, cfg.length});
    Material mat{MaterialKind::SaintVenantKirchhoff, cfg.matrix_young, cfg.poisson_ratio};
    EmbeddedBeamSetup s;
    s.matrix = ContinuumModel({std::move(block)}, mat);
    s.matrix.set_threads(cfg.threads);
    DirichletBC clamp;
    clamp.patch = 0;
    clamp.side = 4;
    clamp.value = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(3); };
    s.dirichlet = interpolate_dirichlet(s.matrix, {clamp});
    BeamModel beam(KnotVector::open_uniform(cfg.degree_z, nz, 0.0, cfg.length),
                   BeamSection{cfg.fiber_young, cfg.fiber_poisson_ratio, cfg.radius},
                   Eigen::Vector3d(0.5 * cfg.width, 0.5 * cfg.width, 0.0));
    s.fiber = FiberEmbedding(s.matrix, 0, std::move(beam));
    return s;
}

EmbeddedBeamResult solve_embedded_beam(const EmbeddedBeamConfig& cfg, const NewtonConfig& newton) {
    const auto t0 = std::chrono::steady_clock::now();
    const EmbeddedBeamSetup setup = make_embedded_beam(cfg);
    EmbeddedProblem prob(setup.matrix, setup.dirichlet, setup.fiber, cfg.tip_moment);
    Eigen::VectorXd x = prob.initial_state();
    EmbeddedBeamResult out;
    out.matrix_dofs = setup.matrix.num_dofs();
    out.unknowns = prob.num_unknowns();
    out.report = newton_solve_nothrow(prob, x, newton);
    out.displacement = prob.displacement(x);
    out.rod = prob.rod(x);
    const BeamModel& beam = setup.fiber.beam();
    out.tip_displacement =
        beam.variables_at(out.rod, beam.knots().upper()).segment<3>(pv::phi) - beam.reference_position(beam.knots().upper());
    const Eigen::VectorXd g = setup.fiber.coupling_constraints(out.displacement, out.rod.phi);
    for (int k = 0; k < setup.fiber.num_points(); ++k) {
        out.constraint_violation = std::max(out.constraint_violation, g.segment<3>(3 * k).norm());
    }
    for (const PointBasis& b : beam.points()) {
        const PointVariables z = beam.variables(out.rod, b);
        out.max_unit_violation = std::max(out.max_unit_violation, std::abs(z.segment<4>(pv::q).norm() - 1.0));
    }
    const Eigen::VectorXd lambda = prob.multipliers(x);
    out.force_balance = Eigen::Map<const Eigen::MatrixXd>(lambda.data(), 3, setup.fiber.num_points()).rowwise().sum().norm();
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace miga
