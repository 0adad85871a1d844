#include "miga/continuum.hpp"

#include "miga/errors.hpp"
#include "miga/quadrature.hpp"

#include <cmath>
#include <sstream>
#include <mutex>
#include <thread>

namespace miga {

void Material::validate() const {
    if (!(young_modulus > 0.0)) throw ConfigurationError("material: Young's modulus must be positive");
    if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) throw ConfigurationError("material: Poisson ratio must lie in (-1, 0.5)");
}

SvkResponse svk_stress(const Material& mat, const Eigen::Matrix3d& F, long element) {
    const double J = F.determinant();
    if (!(J > 0.0)) {
        std::ostringstream os;
        os << "element inversion: det F = " << J;
        if (element >= 0) os << " in element " << element;
        throw ElementInversionError(os.str(), element);
    }
    const double lam = mat.lame_lambda();
    const double mu = mat.lame_mu();
    const Eigen::Matrix3d E = 0.5 * (F.transpose() * F - Eigen::Matrix3d::Identity());
    SvkResponse r;
    r.S = lam * E.trace() * Eigen::Matrix3d::Identity() + 2.0 * mu * E;
    r.P = F * r.S;
    r.psi = 0.5 * (E.array() * r.S.array()).sum();
    return r;
}

Eigen::Matrix<double, 9, 9> svk_tangent(const Material& mat, const Eigen::Matrix3d& F) {
    const double lam = mat.lame_lambda();
    const double mu = mat.lame_mu();
    const Eigen::Matrix3d E = 0.5 * (F.transpose() * F - Eigen::Matrix3d::Identity());
    const Eigen::Matrix3d S = lam * E.trace() * Eigen::Matrix3d::Identity() + 2.0 * mu * E;
    const Eigen::Matrix3d FFt = F * F.transpose();
    Eigen::Matrix<double, 9, 9> A;
    for (int i = 0; i < 3; ++i) {
        for (int Jj = 0; Jj < 3; ++Jj) {
            for (int k = 0; k < 3; ++k) {
                for (int L = 0; L < 3; ++L) {
                    double v = lam * F(i, Jj) * F(k, L) + mu * F(i, L) * F(k, Jj);
                    if (i == k) v += S(Jj, L);
                    if (Jj == L) v += mu * FFt(i, k);
                    A(3 * i + Jj, 3 * k + L) = v;
                }
            }
        }
    }
    return A;
}

double von_mises(const Eigen::Matrix3d& s) {
    const Eigen::Matrix3d dev = s - s.trace() / 3.0 * Eigen::Matrix3d::Identity();
    return std::sqrt(1.5 * (dev.array() * dev.array()).sum());
}

namespace {

std::vector<int> element_control_points(const Patch& patch, const Element& e) {
    std::array<int, 3> first{0, 0, 0};
    std::array<int, 3> count{1, 1, 1};
    for (int d = 0; d < patch.dim(); ++d) {
        const int p = patch.space(d).degree();
        first[static_cast<std::size_t>(d)] = e.spans[static_cast<std::size_t>(d)] - p;
        count[static_cast<std::size_t>(d)] = p + 1;
    }
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count[0] * count[1] * count[2]));
    for (int c = 0; c < count[2]; ++c) {
        for (int b = 0; b < count[1]; ++b) {
            for (int a = 0; a < count[0]; ++a) out.push_back(patch.index({first[0] + a, first[1] + b, first[2] + c}));
        }
    }
    return out;
}

struct VoigtLayout {
    int nv = 0;
    std::vector<std::array<int, 2>> pairs;
};

VoigtLayout voigt(int d) {
    if (d == 2) return {3, {{0, 0}, {1, 1}, {0, 1}}};
    return {6, {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {0, 2}}};
}

Eigen::MatrixXd voigt_elasticity(const Material& m, int d) {
    const VoigtLayout vl = voigt(d);
    const double lam = m.lame_lambda();
    const double mu = m.lame_mu();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(vl.nv, vl.nv);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) C(a, b) = lam + (a == b ? 2 * mu : 0.0);
    }
    for (int s = d; s < vl.nv; ++s) C(s, s) = mu;
    return C;
}

struct ElementOutput {
    std::vector<int> dofs;
    Eigen::VectorXd r;
    Eigen::MatrixXd K;
};

void element_contribution(const ContinuumModel& model, int pi, const Element& el, const Eigen::VectorXd& u,
                          bool want_r, bool want_K, const ScalarField* source, ElementOutput& out) {
    const Patch& patch = model.patch(pi);
    const Material& mat = model.material();
    const int d = patch.dim();
    const int nc = model.ncomp();
    const std::vector<int> cps = element_control_points(patch, el);
    const int nf = static_cast<int>(cps.size());
    const int ne = nf * nc;
    out.dofs.resize(static_cast<std::size_t>(ne));
    Eigen::MatrixXd ue(nf, nc);
    for (int a = 0; a < nf; ++a) {
        for (int c = 0; c < nc; ++c) {
            const int g = model.dof(pi, cps[static_cast<std::size_t>(a)], c);
            out.dofs[static_cast<std::size_t>(a * nc + c)] = g;
            ue(a, c) = u[g];
        }
    }
    if (want_r) out.r = Eigen::VectorXd::Zero(ne);
    if (want_K) out.K = Eigen::MatrixXd::Zero(ne, ne);
    const std::vector<QuadPoint> qps = patch.quadrature(el);

    if (mat.kind == MaterialKind::Poisson) {
        for (const QuadPoint& q : qps) {
            const PointData pd = patch.evaluate(std::span<const double>(q.xi.data(), static_cast<std::size_t>(d)));
            const double w = q.weight * pd.detJ;
            if (want_r) {
                const Eigen::VectorXd grad = pd.dR_dx * ue.col(0);
                out.r.noalias() += w * pd.dR_dx.transpose() * grad;
                if (source) out.r.noalias() -= w * (*source)(pd.x) * pd.R;
            }
            if (want_K) out.K.noalias() += w * pd.dR_dx.transpose() * pd.dR_dx;
        }
        return;
    }

    const bool nonlinear = mat.kind == MaterialKind::SaintVenantKirchhoff;
    if (mat.kind == MaterialKind::LinearElasticPlaneStrain && d != 2) {
        throw ConfigurationError("plane-strain linear elasticity requires two-dimensional patches");
    }
    const VoigtLayout vl = voigt(d);
    const Eigen::MatrixXd C = voigt_elasticity(mat, d);
    const Eigen::MatrixXd L = C.llt().matrixL();
    const int nq = static_cast<int>(qps.size());
    Eigen::MatrixXd G;
    if (want_K) G.resize(ne, static_cast<Eigen::Index>(vl.nv) * nq);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nf, nf);
    Eigen::MatrixXd B(vl.nv, ne);
    for (int iq = 0; iq < nq; ++iq) {
        const QuadPoint& q = qps[static_cast<std::size_t>(iq)];
        const PointData pd = patch.evaluate(std::span<const double>(q.xi.data(), static_cast<std::size_t>(d)));
        const double w = q.weight * pd.detJ;
        const Eigen::MatrixXd gradu = ue.transpose() * pd.dR_dx.transpose();  // d x d
        Eigen::MatrixXd F = Eigen::MatrixXd::Identity(d, d);
        Eigen::VectorXd Sv(vl.nv);
        Eigen::MatrixXd Smat(d, d);
        if (nonlinear) {
            F += gradu;
            Eigen::Matrix3d F3 = Eigen::Matrix3d::Identity();
            F3.topLeftCorner(d, d) = F;
            const SvkResponse resp = svk_stress(mat, F3, el.id);
            Smat = resp.S.topLeftCorner(d, d);
            for (int v = 0; v < vl.nv; ++v) Sv[v] = Smat(vl.pairs[static_cast<std::size_t>(v)][0], vl.pairs[static_cast<std::size_t>(v)][1]);
        } else {
            Eigen::VectorXd ev(vl.nv);
            for (int v = 0; v < vl.nv; ++v) {
                const auto [I, J] = vl.pairs[static_cast<std::size_t>(v)];
                ev[v] = I == J ? gradu(I, I) : gradu(I, J) + gradu(J, I);
            }
            Sv = C * ev;
        }
        for (int a = 0; a < nf; ++a) {
            for (int i = 0; i < nc; ++i) {
                for (int v = 0; v < vl.nv; ++v) {
                    const auto [I, J] = vl.pairs[static_cast<std::size_t>(v)];
                    double b = F(i, I) * pd.dR_dx(J, a);
                    if (I != J) b += F(i, J) * pd.dR_dx(I, a);
                    B(v, a * nc + i) = b;
                }
            }
        }
        if (want_r) out.r.noalias() += w * B.transpose() * Sv;
        if (want_K) {
            G.middleCols(static_cast<Eigen::Index>(vl.nv) * iq, vl.nv).noalias() = std::sqrt(w) * B.transpose() * L;
            if (nonlinear) H.noalias() += w * pd.dR_dx.transpose() * Smat * pd.dR_dx;
        }
    }
    if (want_K) {
        out.K.selfadjointView<Eigen::Lower>().rankUpdate(G);
        out.K.triangularView<Eigen::StrictlyUpper>() = out.K.transpose();
        if (nonlinear) {
            for (int a = 0; a < nf; ++a) {
                for (int b = 0; b < nf; ++b) {
                    for (int i = 0; i < nc; ++i) out.K(a * nc + i, b * nc + i) += H(a, b);
                }
            }
        }
    }
}

}  // namespace

ContinuumModel::ContinuumModel(std::vector<Patch> patches, Material material)
    : patches_(std::move(patches)), material_(material) {
    material_.validate();
    if (patches_.empty()) throw ConfigurationError("continuum model: no patches");
    const int d = patches_.front().dim();
    for (const Patch& p : patches_) {
        if (p.dim() != d || p.sdim() != d) throw ConfigurationError("continuum model: patches must be square maps of one dimension");
    }
    ncomp_ = material_.kind == MaterialKind::Poisson ? 1 : d;
    int off = 0;
    std::vector<std::vector<int>> conn;
    for (std::size_t pi = 0; pi < patches_.size(); ++pi) {
        offsets_.push_back(off);
        for (const Element& e : patches_[pi].elements()) {
            std::vector<int> dofs;
            for (int A : element_control_points(patches_[pi], e)) {
                for (int c = 0; c < ncomp_; ++c) dofs.push_back(off + ncomp_ * A + c);
            }
            conn.push_back(std::move(dofs));
        }
        off += ncomp_ * patches_[pi].num_basis();
    }
    ndof_ = off;
    global_ = SparseAssembler(ndof_, ndof_, conn);
}

void ContinuumModel::assemble(const Eigen::VectorXd& u, Eigen::VectorXd* r, SpMat* K, const ScalarField* source) const {
    if (u.size() != ndof_) throw DomainError("continuum assemble: state vector has wrong size");
    struct Job {
        int patch;
        Element element;
    };
    std::vector<Job> jobs;
    for (std::size_t pi = 0; pi < patches_.size(); ++pi) {
        for (const Element& e : patches_[pi].elements()) jobs.push_back({static_cast<int>(pi), e});
    }
    const int nt = std::max(1, std::min<int>(threads_, static_cast<int>(jobs.size())));
    std::vector<Eigen::VectorXd> rs(static_cast<std::size_t>(nt));
    std::vector<SpMat> Ks(static_cast<std::size_t>(nt));
    auto work = [&](int t) {
        Eigen::VectorXd& rt = rs[static_cast<std::size_t>(t)];
        SpMat& Kt = Ks[static_cast<std::size_t>(t)];
        if (r) rt = Eigen::VectorXd::Zero(ndof_);
        if (K) Kt = global_.zero_matrix();
        const std::size_t begin = jobs.size() * static_cast<std::size_t>(t) / static_cast<std::size_t>(nt);
        const std::size_t end = jobs.size() * static_cast<std::size_t>(t + 1) / static_cast<std::size_t>(nt);
        ElementOutput eo;
        for (std::size_t j = begin; j < end; ++j) {
            element_contribution(*this, jobs[j].patch, jobs[j].element, u, r != nullptr, K != nullptr, source, eo);
            if (r) {
                for (std::size_t a = 0; a < eo.dofs.size(); ++a) rt[eo.dofs[a]] += eo.r[static_cast<Eigen::Index>(a)];
            }
            if (K) global_.add(Kt, eo.dofs, eo.K);
        }
    };
    if (nt == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr err;
        std::mutex m;
        for (int t = 0; t < nt; ++t) {
            pool.emplace_back([&, t] {
                try {
                    work(t);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!err) err = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (err) std::rethrow_exception(err);
    }
    if (r) {
        *r = rs[0];
        for (int t = 1; t < nt; ++t) *r += rs[static_cast<std::size_t>(t)];
    }
    if (K) {
        *K = std::move(Ks[0]);
        for (int t = 1; t < nt; ++t) {
            Eigen::Map<Eigen::VectorXd>(K->valuePtr(), K->nonZeros()) +=
                Eigen::Map<const Eigen::VectorXd>(Ks[static_cast<std::size_t>(t)].valuePtr(), K->nonZeros());
        }
    }
}

double ContinuumModel::energy(const Eigen::VectorXd& u) const {
    double e = 0.0;
    for (std::size_t pi = 0; pi < patches_.size(); ++pi) {
        const Patch& patch = patches_[pi];
        const int d = patch.dim();
        const Eigen::MatrixXd coeffs = patch_coefficients(u, static_cast<int>(pi));
        for (const Element& el : patch.elements()) {
            for (const QuadPoint& q : patch.quadrature(el)) {
                const std::span<const double> xi(q.xi.data(), static_cast<std::size_t>(d));
                const PointData pd = patch.evaluate(xi);
                const double w = q.weight * pd.detJ;
                Eigen::MatrixXd g = Eigen::MatrixXd::Zero(ncomp_, d);
                for (std::size_t f = 0; f < pd.indices.size(); ++f) {
                    g += coeffs.row(static_cast<Eigen::Index>(pd.indices[f])).transpose() * pd.dR_dx.col(static_cast<Eigen::Index>(f)).transpose();
                }
                if (material_.kind == MaterialKind::Poisson) {
                    e += 0.5 * w * g.squaredNorm();
                } else if (material_.kind == MaterialKind::SaintVenantKirchhoff) {
                    Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
                    F.topLeftCorner(d, d) += g;
                    e += w * svk_stress(material_, F, el.id).psi;
                } else {
                    const Eigen::MatrixXd eps = 0.5 * (g + g.transpose());
                    const double tr = eps.trace();
                    e += w * (0.5 * material_.lame_lambda() * tr * tr + material_.lame_mu() * eps.squaredNorm());
                }
            }
        }
    }
    return e;
}

Eigen::MatrixXd ContinuumModel::patch_coefficients(const Eigen::VectorXd& u, int pi) const {
    const int n = patch(pi).num_basis();
    Eigen::MatrixXd c(n, ncomp_);
    for (int A = 0; A < n; ++A) {
        for (int k = 0; k < ncomp_; ++k) c(A, k) = u[dof(pi, A, k)];
    }
    return c;
}

Eigen::Matrix3d ContinuumModel::stress(const Eigen::VectorXd& u, int pi, std::span<const double> xi) const {
    const Patch& p = patch(pi);
    const int d = p.dim();
    const Eigen::MatrixXd g = physical_gradient(p, patch_coefficients(u, pi), xi);
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    if (material_.kind == MaterialKind::Poisson) {
        s.row(0).head(d) = g.row(0);
        return s;
    }
    if (material_.kind == MaterialKind::SaintVenantKirchhoff) {
        Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
        F.topLeftCorner(d, d) += g;
        return svk_stress(material_, F).P;
    }
    Eigen::Matrix3d eps = Eigen::Matrix3d::Zero();
    eps.topLeftCorner(d, d) = 0.5 * (g + g.transpose());
    return material_.lame_lambda() * eps.trace() * Eigen::Matrix3d::Identity() + 2.0 * material_.lame_mu() * eps;
}

// ============================================================================
// Boundary data
// ============================================================================

int DirichletSet::count() const {
    int n = 0;
    for (char f : fixed) n += f ? 1 : 0;
    return n;
}

void DirichletSet::impose(Eigen::VectorXd& u) const {
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (fixed[i]) u[static_cast<Eigen::Index>(i)] = values[static_cast<Eigen::Index>(i)];
    }
}

namespace {

std::vector<int> other_directions(int dim, int d) {
    std::vector<int> out;
    for (int k = 0; k < dim; ++k) {
        if (k != d) out.push_back(k);
    }
    return out;
}

}  // namespace

DirichletSet interpolate_dirichlet(const ContinuumModel& model, const std::vector<DirichletBC>& bcs) {
    DirichletSet set;
    set.fixed.assign(static_cast<std::size_t>(model.num_dofs()), 0);
    set.values = Eigen::VectorXd::Zero(model.num_dofs());
    for (const DirichletBC& bc : bcs) {
        if (bc.patch < 0 || bc.patch >= static_cast<int>(model.patches().size())) throw ConfigurationError("dirichlet: patch index out of range");
        const Patch& patch = model.patch(bc.patch);
        const int dim = patch.dim();
        const int d = bc.side / 2;
        if (bc.side < 0 || d >= dim) throw ConfigurationError("dirichlet: side index out of range");
        const double fixed_xi = bc.side % 2 == 0 ? patch.space(d).knots().lower() : patch.space(d).knots().upper();
        const std::vector<int> others = other_directions(dim, d);
        std::vector<SplineSpace> face_spaces;
        std::vector<std::vector<double>> g;
        for (int k : others) {
            face_spaces.push_back(patch.space(k));
            g.push_back(greville(patch.space(k).knots()));
        }
        const std::vector<int> cps = patch.side_indices(bc.side);
        const auto nface = static_cast<Eigen::Index>(cps.size());
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nface, nface);
        Eigen::MatrixXd G(nface, model.ncomp());
        for (Eigen::Index row = 0; row < nface; ++row) {
            std::vector<double> fxi;
            std::array<double, 3> full{0, 0, 0};
            Eigen::Index rem = row;
            for (std::size_t k = 0; k < others.size(); ++k) {
                const auto nk = static_cast<Eigen::Index>(g[k].size());
                const double v = g[k][static_cast<std::size_t>(rem % nk)];
                rem /= nk;
                fxi.push_back(v);
                full[static_cast<std::size_t>(others[k])] = v;
            }
            full[static_cast<std::size_t>(d)] = fixed_xi;
            if (!fxi.empty()) {
                const TensorBasis tb = tensor_basis(face_spaces, fxi, 0);
                for (std::size_t f = 0; f < tb.indices.size(); ++f) A(row, static_cast<Eigen::Index>(tb.indices[f])) = tb.values(0, static_cast<Eigen::Index>(f));
            } else {
                A(row, 0) = 1.0;
            }
            const Eigen::VectorXd x = patch.map_point(std::span<const double>(full.data(), static_cast<std::size_t>(dim)));
            const Eigen::VectorXd val = bc.value(x);
            if (val.size() != model.ncomp()) throw ConfigurationError("dirichlet: boundary data has wrong number of components");
            G.row(row) = val.transpose();
        }
        const Eigen::MatrixXd coef = A.partialPivLu().solve(G);
        std::vector<int> comps = bc.components;
        if (comps.empty()) {
            for (int c = 0; c < model.ncomp(); ++c) comps.push_back(c);
        }
        for (Eigen::Index f = 0; f < nface; ++f) {
            for (int c : comps) {
                if (c < 0 || c >= model.ncomp()) throw ConfigurationError("dirichlet: component index out of range");
                const int dof = model.dof(bc.patch, cps[static_cast<std::size_t>(f)], c);
                const double v = coef(f, c);
                auto& fx = set.fixed[static_cast<std::size_t>(dof)];
                if (fx && std::abs(set.values[dof] - v) > 1e-10 * (1.0 + std::abs(v))) {
                    std::ostringstream os;
                    os << "dirichlet: conflicting prescribed values " << set.values[dof] << " and " << v
                       << " at patch " << bc.patch << " control point " << cps[static_cast<std::size_t>(f)] << " component " << c;
                    throw ConfigurationError(os.str());
                }
                fx = 1;
                set.values[dof] = v;
            }
        }
    }
    return set;
}

std::vector<FacePoint> face_quadrature(const Patch& patch, int side, int extra_points) {
    const int dim = patch.dim();
    const int d = side / 2;
    if (side < 0 || d >= dim) throw DomainError("face_quadrature: invalid side");
    const KnotVector& kvd = patch.space(d).knots();
    const auto spans = kvd.element_spans();
    const int boundary_span = side % 2 == 0 ? spans.front() : spans.back();
    const double fixed_xi = side % 2 == 0 ? kvd.lower() : kvd.upper();
    const double sign = side % 2 == 0 ? -1.0 : 1.0;
    std::vector<FacePoint> out;
    for (const Element& e : patch.elements()) {
        if (e.spans[static_cast<std::size_t>(d)] != boundary_span) continue;
        std::array<QuadratureRule, 3> rules;
        for (int k = 0; k < 3; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            if (k < dim && k != d) {
                rules[uk] = gauss_legendre(patch.space(k).degree() + 1 + extra_points, e.lower[uk], e.upper[uk]);
            } else {
                rules[uk] = QuadratureRule{{k == d ? fixed_xi : 0.0}, {1.0}};
            }
        }
        for (std::size_t c = 0; c < rules[2].points.size(); ++c) {
            for (std::size_t b = 0; b < rules[1].points.size(); ++b) {
                for (std::size_t a = 0; a < rules[0].points.size(); ++a) {
                    FacePoint fp;
                    fp.xi = {rules[0].points[a], rules[1].points[b], rules[2].points[c]};
                    const PointData pd = patch.evaluate(std::span<const double>(fp.xi.data(), static_cast<std::size_t>(dim)), false);
                    const Eigen::MatrixXd Jinv_t = pd.J.inverse().transpose();
                    const Eigen::VectorXd nrm = sign * Jinv_t.col(d);
                    // Surface measure: |det J| * |J^{-T} e_d|
                    const double measure = std::abs(pd.detJ) * nrm.norm();
                    fp.weight = rules[0].weights[a] * rules[1].weights[b] * rules[2].weights[c] * measure;
                    fp.normal = nrm.normalized();
                    out.push_back(std::move(fp));
                }
            }
        }
    }
    return out;
}

Eigen::VectorXd assemble_neumann(const ContinuumModel& model, const std::vector<NeumannBC>& bcs) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(model.num_dofs());
    for (const NeumannBC& bc : bcs) {
        const Patch& patch = model.patch(bc.patch);
        for (const FacePoint& fp : face_quadrature(patch, bc.side, 1)) {
            const std::span<const double> xi(fp.xi.data(), static_cast<std::size_t>(patch.dim()));
            const TensorBasis tb = tensor_basis(patch.spaces(), xi, 0);
            const Eigen::VectorXd t = bc.traction(patch.map_point(xi));
            if (t.size() != model.ncomp()) throw ConfigurationError("neumann: traction has wrong number of components");
            for (std::size_t k = 0; k < tb.indices.size(); ++k) {
                for (int c = 0; c < model.ncomp(); ++c) {
                    f[model.dof(bc.patch, static_cast<int>(tb.indices[k]), c)] += fp.weight * tb.values(0, static_cast<Eigen::Index>(k)) * t[c];
                }
            }
        }
    }
    return f;
}

}  // namespace miga
