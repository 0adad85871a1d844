#include "miga/dual_basis.hpp"

#include "miga/errors.hpp"
#include "miga/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace miga {

namespace {

/// Local mass matrix of the p+1 B-splines active on a span.
Eigen::MatrixXd local_mass(const KnotVector& kv, int span) {
    const int p = kv.degree();
    const QuadratureRule q = gauss_legendre(p + 1, kv[static_cast<std::size_t>(span)], kv[static_cast<std::size_t>(span + 1)]);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p + 1, p + 1);
    for (std::size_t g = 0; g < q.points.size(); ++g) {
        const Eigen::MatrixXd N = eval_basis_derivs(kv, span, q.points[g], 0);
        M.noalias() += q.weights[g] * N.row(0).transpose() * N.row(0);
    }
    return M;
}

/// Dense Gram-type integral over one element of coefficient-represented polynomials.
Eigen::MatrixXd element_gram(const KnotVector& kv, int span, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a * local_mass(kv, span) * b.transpose();
}

}  // namespace

// ============================================================================
// PiecewiseBasis
// ============================================================================

PiecewiseBasis::PiecewiseBasis(KnotVector trace, int size, std::vector<Piece> pieces)
    : trace_(std::move(trace)), size_(size), pieces_(std::move(pieces)) {
    if (static_cast<int>(pieces_.size()) != trace_.num_elements()) {
        throw InvariantError("piecewise basis: one piece per trace element required");
    }
}

int PiecewiseBasis::element_of(double xi) const {
    const int span = find_span(trace_, xi);
    const auto it = std::lower_bound(pieces_.begin(), pieces_.end(), span,
                                     [](const Piece& pc, int s) { return pc.span < s; });
    return static_cast<int>(it - pieces_.begin());
}

Eigen::VectorXd PiecewiseBasis::eval_on(int e, double xi) const {
    const Piece& pc = pieces_[static_cast<std::size_t>(e)];
    const Eigen::MatrixXd N = eval_basis_derivs(trace_, pc.span, xi, 0);
    return pc.coeffs * N.row(0).transpose();
}

Eigen::VectorXd PiecewiseBasis::eval(double xi) const {
    const int e = element_of(xi);
    const Eigen::VectorXd v = eval_on(e, xi);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(size_);
    const auto& f = pieces_[static_cast<std::size_t>(e)].functions;
    for (std::size_t k = 0; k < f.size(); ++k) out[f[k]] = v[static_cast<Eigen::Index>(k)];
    return out;
}

std::vector<int> PiecewiseBasis::support(int i) const {
    std::vector<int> out;
    for (std::size_t e = 0; e < pieces_.size(); ++e) {
        const auto& f = pieces_[e].functions;
        const auto it = std::find(f.begin(), f.end(), i);
        if (it == f.end()) continue;
        if (pieces_[e].coeffs.row(it - f.begin()).cwiseAbs().maxCoeff() > 1e-14) out.push_back(static_cast<int>(e));
    }
    return out;
}

PiecewiseBasis PiecewiseBasis::transformed(const Eigen::MatrixXd& T) const {
    if (T.cols() != size_) throw DomainError("piecewise basis: transformation has wrong column count");
    std::vector<Piece> out;
    for (const Piece& pc : pieces_) {
        Piece np;
        np.span = pc.span;
        Eigen::MatrixXd Tloc(T.rows(), static_cast<Eigen::Index>(pc.functions.size()));
        for (std::size_t k = 0; k < pc.functions.size(); ++k) Tloc.col(static_cast<Eigen::Index>(k)) = T.col(pc.functions[k]);
        const Eigen::MatrixXd full = Tloc * pc.coeffs;
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < full.rows(); ++i) {
            if (Tloc.row(i).cwiseAbs().maxCoeff() > 0.0) rows.push_back(i);
        }
        np.coeffs.resize(static_cast<Eigen::Index>(rows.size()), full.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            np.functions.push_back(static_cast<int>(rows[r]));
            np.coeffs.row(static_cast<Eigen::Index>(r)) = full.row(rows[r]);
        }
        out.push_back(std::move(np));
    }
    return PiecewiseBasis(trace_, static_cast<int>(T.rows()), std::move(out));
}

Eigen::VectorXd PiecewiseBasis::monomial_coefficients(int e, int i) const {
    const Piece& pc = pieces_[static_cast<std::size_t>(e)];
    const int p = degree();
    const auto it = std::find(pc.functions.begin(), pc.functions.end(), i);
    if (it == pc.functions.end()) return Eigen::VectorXd::Zero(p + 1);
    const double a = trace_[static_cast<std::size_t>(pc.span)];
    const double b = trace_[static_cast<std::size_t>(pc.span + 1)];
    Eigen::MatrixXd V(p + 1, p + 1);
    Eigen::VectorXd y(p + 1);
    for (int r = 0; r <= p; ++r) {
        const double t = p == 0 ? 0.5 : static_cast<double>(r) / p;
        for (int c = 0; c <= p; ++c) V(r, c) = std::pow(t, c);
        y[r] = eval_on(e, a + t * (b - a))[it - pc.functions.begin()];
    }
    return V.fullPivLu().solve(y);
}

// ============================================================================
// Constructions
// ============================================================================

PiecewiseBasis standard_basis(const KnotVector& trace) {
    const int p = trace.degree();
    std::vector<PiecewiseBasis::Piece> pieces;
    for (int span : trace.element_spans()) {
        PiecewiseBasis::Piece pc;
        pc.span = span;
        for (int k = 0; k <= p; ++k) pc.functions.push_back(span - p + k);
        pc.coeffs = Eigen::MatrixXd::Identity(p + 1, p + 1);
        pieces.push_back(std::move(pc));
    }
    return PiecewiseBasis(trace, trace.num_basis(), std::move(pieces));
}

DualBasis step1_elementwise_dual(const KnotVector& trace) {
    const int p = trace.degree();
    std::vector<PiecewiseBasis::Piece> pieces;
    int e = 0;
    for (int span : trace.element_spans()) {
        const Eigen::MatrixXd M = local_mass(trace, span);
        const Eigen::VectorXd D = M.rowwise().sum();
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (!lu.isInvertible()) throw InvariantError("elementwise dual: singular local mass matrix");
        PiecewiseBasis::Piece pc;
        pc.span = span;
        for (int k = 0; k <= p; ++k) pc.functions.push_back(e * (p + 1) + k);
        pc.coeffs = D.asDiagonal() * lu.inverse();
        pieces.push_back(std::move(pc));
        ++e;
    }
    const int size = static_cast<int>(pieces.size()) * (p + 1);
    return DualBasis{PiecewiseBasis(trace, size, std::move(pieces)), DualStage::Elementwise};
}

DualBasis step2_glue(const DualBasis& elementwise, const KnotVector& trace) {
    if (elementwise.stage != DualStage::Elementwise) throw DomainError("step2_glue: expects the elementwise dual basis");
    const int p = trace.degree();
    std::vector<PiecewiseBasis::Piece> pieces;
    for (const auto& src : elementwise.basis.pieces()) {
        PiecewiseBasis::Piece pc;
        pc.span = src.span;
        for (int k = 0; k <= p; ++k) pc.functions.push_back(src.span - p + k);
        pc.coeffs = src.coeffs;
        pieces.push_back(std::move(pc));
    }
    return DualBasis{PiecewiseBasis(trace, trace.num_basis(), std::move(pieces)), DualStage::Glued};
}

namespace {

struct PairFunction {
    int element = 0;          ///< first element of the pair (e, e+1)
    Eigen::VectorXd coeffs;   ///< 2(p+1): local coefficients on e then on e+1
};

/// Basis of piecewise polynomials on two adjacent elements that are orthogonal to every trace function.
std::vector<PairFunction> pair_functions(const KnotVector& kv, const std::vector<int>& spans, int e) {
    const int p = kv.degree();
    const int s0 = spans[static_cast<std::size_t>(e)];
    const int s1 = spans[static_cast<std::size_t>(e + 1)];
    const int first = s0 - p;
    const int last = s1;
    const Eigen::MatrixXd M0 = local_mass(kv, s0);
    const Eigen::MatrixXd M1 = local_mass(kv, s1);
    Eigen::MatrixXd Cm = Eigen::MatrixXd::Zero(last - first + 1, 2 * (p + 1));
    for (int k = 0; k <= p; ++k) {
        Cm.row(s0 - p + k - first).segment(0, p + 1) += M0.row(k);
        Cm.row(s1 - p + k - first).segment(p + 1, p + 1) += M1.row(k);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Cm, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = 1e-12 * sv[0];
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv[i] > tol ? 1 : 0;
    std::vector<PairFunction> out;
    for (int c = rank; c < 2 * (p + 1); ++c) out.push_back({e, svd.matrixV().col(c)});
    return out;
}

}  // namespace

DualBasis step3_optimal(const DualBasis& glued, const KnotVector& trace) {
    if (glued.stage != DualStage::Glued) throw DomainError("step3_optimal: expects the glued dual basis");
    const int p = trace.degree();
    if (p <= 1) return DualBasis{glued.basis, DualStage::Optimal};

    const PiecewiseBasis& psi = glued.basis;
    const std::vector<int> spans = trace.element_spans();
    const int nel = static_cast<int>(spans.size());
    const int n = trace.num_basis();
    if (nel < 2) return DualBasis{glued.basis, DualStage::Optimal};

    std::vector<PairFunction> eta;
    for (int e = 0; e + 1 < nel; ++e) {
        auto pf = pair_functions(trace, spans, e);
        eta.insert(eta.end(), pf.begin(), pf.end());
    }
    const auto neta = static_cast<Eigen::Index>(eta.size());

    // Monomials in a centred coordinate t = (xi - c) / h on the whole interface.
    const double c = 0.5 * (trace.lower() + trace.upper());
    const double h = 0.5 * (trace.upper() - trace.lower());
    const int nq = p + 2;
    const Eigen::VectorXd phi_int = integrals(standard_basis(trace));

    // cf(j, k) = integral(f_k phi_j) / integral(phi_j)
    Eigen::MatrixXd cf = Eigen::MatrixXd::Zero(n, p + 1);
    for (int span : spans) {
        const QuadratureRule q = gauss_legendre(nq, trace[static_cast<std::size_t>(span)], trace[static_cast<std::size_t>(span + 1)]);
        for (std::size_t g = 0; g < q.points.size(); ++g) {
            const Eigen::MatrixXd N = eval_basis_derivs(trace, span, q.points[g], 0);
            const double t = (q.points[g] - c) / h;
            for (int k = 0; k <= p; ++k) {
                cf.block(span - p, k, p + 1, 1) += q.weights[g] * std::pow(t, k) * N.row(0).transpose();
            }
        }
    }
    for (int j = 0; j < n; ++j) cf.row(j) /= phi_int[j];

    // Gram matrix of the pair functions and moments of the residuals r(f_k) = f_k - sum_j cf(j,k) psi_j.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(neta, neta);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(neta, p + 1);
    std::vector<std::vector<Eigen::Index>> on_element(static_cast<std::size_t>(nel));
    for (Eigen::Index a = 0; a < neta; ++a) {
        on_element[static_cast<std::size_t>(eta[static_cast<std::size_t>(a)].element)].push_back(a);
        on_element[static_cast<std::size_t>(eta[static_cast<std::size_t>(a)].element + 1)].push_back(a);
    }
    auto local_coeffs = [&](Eigen::Index a, int e) -> Eigen::VectorXd {
        const PairFunction& pf = eta[static_cast<std::size_t>(a)];
        return pf.coeffs.segment(e == pf.element ? 0 : p + 1, p + 1);
    };
    for (int e = 0; e < nel; ++e) {
        const int span = spans[static_cast<std::size_t>(e)];
        const QuadratureRule q = gauss_legendre(nq, trace[static_cast<std::size_t>(span)], trace[static_cast<std::size_t>(span + 1)]);
        const auto& act = on_element[static_cast<std::size_t>(e)];
        for (std::size_t g = 0; g < q.points.size(); ++g) {
            const Eigen::RowVectorXd N = eval_basis_derivs(trace, span, q.points[g], 0).row(0);
            const Eigen::VectorXd psiv = psi.eval(q.points[g]);
            const double t = (q.points[g] - c) / h;
            Eigen::VectorXd ev(static_cast<Eigen::Index>(act.size()));
            for (std::size_t i = 0; i < act.size(); ++i) ev[static_cast<Eigen::Index>(i)] = N.dot(local_coeffs(act[i], e));
            for (std::size_t i = 0; i < act.size(); ++i) {
                for (std::size_t j = 0; j < act.size(); ++j) {
                    G(act[i], act[j]) += q.weights[g] * ev[static_cast<Eigen::Index>(i)] * ev[static_cast<Eigen::Index>(j)];
                }
                for (int k = 0; k <= p; ++k) {
                    const double r = std::pow(t, k) - cf.col(k).dot(psiv);
                    rhs(act[i], k) += q.weights[g] * r * ev[static_cast<Eigen::Index>(i)];
                }
            }
        }
    }
    const Eigen::MatrixXd beta = G.ldlt().solve(rhs);  // neta x (p+1)

    // Per pair: distribute the expansion onto the p+1 dual functions active on its first element.
    Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(n, neta);  // psi_tilde_j = psi_j + sum_a corr(j,a) eta_a
    Eigen::Index a0 = 0;
    while (a0 < neta) {
        const int e = eta[static_cast<std::size_t>(a0)].element;
        Eigen::Index a1 = a0;
        while (a1 < neta && eta[static_cast<std::size_t>(a1)].element == e) ++a1;
        const int j0 = spans[static_cast<std::size_t>(e)] - p;
        const Eigen::MatrixXd V = cf.block(j0, 0, p + 1, p + 1).transpose();  // V(k, j)
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
        if (!lu.isInvertible()) throw InvariantError("optimal dual: singular local moment system");
        const Eigen::MatrixXd A = lu.solve(beta.middleRows(a0, a1 - a0).transpose());  // (p+1) x (#pair fns)
        corr.block(j0, a0, p + 1, a1 - a0) = A;
        a0 = a1;
    }

    // Assemble the new pieces: original coefficients plus pair-function corrections.
    std::vector<PiecewiseBasis::Piece> pieces;
    for (int e = 0; e < nel; ++e) {
        const auto& src = psi.pieces()[static_cast<std::size_t>(e)];
        Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, p + 1);
        for (std::size_t k = 0; k < src.functions.size(); ++k) full.row(src.functions[k]) += src.coeffs.row(static_cast<Eigen::Index>(k));
        for (Eigen::Index a : on_element[static_cast<std::size_t>(e)]) {
            full += corr.col(a) * local_coeffs(a, e).transpose();
        }
        PiecewiseBasis::Piece pc;
        pc.span = src.span;
        std::vector<int> rows;
        for (int j = 0; j < n; ++j) {
            if (full.row(j).cwiseAbs().maxCoeff() > 0.0) rows.push_back(j);
        }
        pc.coeffs.resize(static_cast<Eigen::Index>(rows.size()), p + 1);
        for (std::size_t r = 0; r < rows.size(); ++r) pc.coeffs.row(static_cast<Eigen::Index>(r)) = full.row(rows[r]);
        pc.functions = std::move(rows);
        pieces.push_back(std::move(pc));
    }
    return DualBasis{PiecewiseBasis(trace, n, std::move(pieces)), DualStage::Optimal};
}

DualBasis make_dual_basis(const KnotVector& trace, DualStage stage) {
    DualBasis d = step1_elementwise_dual(trace);
    if (stage == DualStage::Elementwise) return d;
    d = step2_glue(d, trace);
    if (stage == DualStage::Glued) return d;
    return step3_optimal(d, trace);
}

Eigen::MatrixXd coupling_matrix(const PiecewiseBasis& a, const PiecewiseBasis& b) {
    if (!(a.trace() == b.trace())) throw DomainError("coupling_matrix: bases live on different traces");
    const KnotVector& kv = a.trace();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.size(), b.size());
    for (std::size_t e = 0; e < a.pieces().size(); ++e) {
        const auto& pa = a.pieces()[e];
        const auto& pb = b.pieces()[e];
        const Eigen::MatrixXd loc = element_gram(kv, pa.span, pa.coeffs, pb.coeffs);
        for (std::size_t i = 0; i < pa.functions.size(); ++i) {
            for (std::size_t j = 0; j < pb.functions.size(); ++j) {
                out(pa.functions[i], pb.functions[j]) += loc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
    }
    return out;
}

Eigen::VectorXd integrals(const PiecewiseBasis& b) {
    const KnotVector& kv = b.trace();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(b.size());
    for (const auto& pc : b.pieces()) {
        const Eigen::VectorXd loc = pc.coeffs * local_mass(kv, pc.span).rowwise().sum();
        for (std::size_t i = 0; i < pc.functions.size(); ++i) out[pc.functions[i]] += loc[static_cast<Eigen::Index>(i)];
    }
    return out;
}

// ============================================================================
// Crosspoint modification
// ============================================================================

namespace {

void check_pl(int p, int l) {
    if (p < 1 || l < 1 || l > p) {
        std::ostringstream os;
        os << "crosspoint modification: unsupported combination p = " << p << ", l = " << l << " (need 1 <= l <= p)";
        throw UnsupportedInputError(os.str());
    }
}

CrosspointModification solve_modification(int p, int l, const Eigen::MatrixXd& alpha) {
    // alpha(k, j): coefficient of polynomial k on function j, j = 0 .. p+l-1 counted from the end.
    const Eigen::MatrixXd G = alpha.block(0, l, p, p);
    const Eigen::MatrixXd H = alpha.block(0, 0, p, l);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (!lu.isInvertible()) throw InvariantError("crosspoint modification: singular reproduction system");
    return CrosspointModification{p, l, lu.solve(H)};
}

}  // namespace

CrosspointModification crosspoint_matrix(int p, int l) {
    check_pl(p, l);
    const KnotVector kv = KnotVector::open_uniform(p, p + l + 2, 0.0, static_cast<double>(p + l + 2));
    const std::vector<double> g = greville(kv);
    const Eigen::MatrixXd A = collocation_matrix(kv, g);
    Eigen::MatrixXd F(static_cast<Eigen::Index>(g.size()), p);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (int k = 0; k < p; ++k) F(static_cast<Eigen::Index>(i), k) = std::pow(g[i], k);
    }
    const Eigen::MatrixXd coef = A.fullPivLu().solve(F);  // n x p
    return solve_modification(p, l, coef.topRows(p + l).transpose());
}

CrosspointModification dual_crosspoint_matrix(const PiecewiseBasis& dual, int l, End end) {
    const KnotVector& kv = dual.trace();
    const int p = kv.degree();
    check_pl(p, l);
    const int n = kv.num_basis();
    if (n < p + l) throw DomainError("dual crosspoint matrix: trace has too few functions");
    const double x0 = end == End::Left ? kv.lower() : kv.upper();
    const double h = (kv.upper() - kv.lower()) / std::max(1, kv.num_elements());
    const PiecewiseBasis phi = standard_basis(kv);
    const Eigen::VectorXd phi_int = integrals(phi);
    Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(p, p + l);
    for (const auto& pc : phi.pieces()) {
        const QuadratureRule q = gauss_legendre(p + 2, kv[static_cast<std::size_t>(pc.span)], kv[static_cast<std::size_t>(pc.span + 1)]);
        for (std::size_t g = 0; g < q.points.size(); ++g) {
            const Eigen::RowVectorXd N = eval_basis_derivs(kv, pc.span, q.points[g], 0).row(0);
            const double t = (q.points[g] - x0) / h;
            for (int f = 0; f <= p; ++f) {
                const int j = pc.span - p + f;
                const int jj = end == End::Left ? j : n - 1 - j;
                if (jj >= p + l) continue;
                for (int k = 0; k < p; ++k) alpha(k, jj) += q.weights[g] * std::pow(t, k) * N[f] / phi_int[j];
            }
        }
    }
    return solve_modification(p, l, alpha);
}

PiecewiseBasis apply_crosspoint_modification(const PiecewiseBasis& basis, const CrosspointModification& cm, End end) {
    const int p = cm.p;
    const int l = cm.l;
    const int n = basis.size();
    if (n < p + l) {
        std::ostringstream os;
        os << "crosspoint modification: basis of size " << n << " has fewer than p+l = " << p + l << " functions";
        throw DomainError(os.str());
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n - l, n);
    auto old_index = [&](int j) { return end == End::Left ? j : n - 1 - j; };
    auto new_index = [&](int i) { return end == End::Left ? i : n - l - 1 - i; };
    for (int i = 0; i < n - l; ++i) T(new_index(i), old_index(i + l)) = 1.0;
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < l; ++j) T(new_index(i), old_index(j)) = cm.C(i, j);
    }
    return basis.transformed(T);
}

}  // namespace miga
