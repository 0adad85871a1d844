#include "miga/mortar.hpp"

#include "miga/errors.hpp"
#include "miga/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace miga {

namespace {

void check_side(const Patch& patch, int side) {
    if (patch.dim() != 2 || patch.sdim() != 2) throw ConfigurationError("mortar coupling requires planar two-dimensional patches");
    if (side < 0 || side > 3) throw ConfigurationError("mortar coupling: side index out of range");
}

int along_direction(int side) { return 1 - side / 2; }

std::array<double, 2> side_point(const Patch& patch, int side, double t) {
    const int fd = side / 2;
    const KnotVector& kv = patch.space(fd).knots();
    std::array<double, 2> xi{};
    xi[static_cast<std::size_t>(fd)] = side % 2 == 0 ? kv.lower() : kv.upper();
    xi[static_cast<std::size_t>(along_direction(side))] = t;
    return xi;
}

Eigen::VectorXd side_map(const Patch& patch, int side, double t) {
    const auto xi = side_point(patch, side, t);
    return patch.map_point(xi);
}

/// Closest point on a patch side (Gauss-Newton on the side curve).
double project_to_side(const Patch& patch, int side, const Eigen::VectorXd& x, double guess) {
    const KnotVector& kv = side_trace(patch, side);
    const double a = kv.lower();
    const double b = kv.upper();
    double t = guess;
    if (!std::isfinite(t)) {
        double best = std::numeric_limits<double>::infinity();
        const int ns = 8 * std::max(1, kv.num_elements());
        for (int i = 0; i <= ns; ++i) {
            const double s = a + (b - a) * i / ns;
            const double d = (side_map(patch, side, s) - x).norm();
            if (d < best) {
                best = d;
                t = s;
            }
        }
    }
    const int ad = along_direction(side);
    for (int it = 0; it < 60; ++it) {
        const auto xi = side_point(patch, side, t);
        const Eigen::VectorXd c = patch.map_point(xi);
        const Eigen::VectorXd tan = patch.jacobian(xi).col(ad);
        const double step = tan.dot(x - c) / tan.squaredNorm();
        const double tn = std::clamp(t + step, a, b);
        const double moved = std::abs(tn - t);
        t = tn;
        if (moved <= 1e-15 * (b - a)) break;
    }
    const double dist = (side_map(patch, side, t) - x).norm();
    if (dist > 1e-8 * patch.diameter()) {
        std::ostringstream os;
        os << "mortar: interface sides do not coincide (distance " << dist << " at x = (" << x.transpose() << "))";
        throw InversionError(os.str());
    }
    return t;
}

struct TracePoint {
    double t = 0.0;       ///< slave trace coordinate
    double weight = 0.0;  ///< including the measure
    int element = 0;      ///< slave trace element
};

std::vector<TracePoint> interface_points(const Patch& slave, int slave_side, const Patch& master, int master_side,
                                         const MortarQuadrature& quad) {
    const KnotVector& ts = side_trace(slave, slave_side);
    const KnotVector& tm = side_trace(master, master_side);
    std::vector<std::pair<double, double>> segments;
    const std::vector<double> sb = ts.breakpoints();
    if (quad.kind == QuadratureKind::Merged) {
        const std::vector<double> bp = merge_interface_mesh(slave, slave_side, master, master_side);
        for (std::size_t i = 0; i + 1 < bp.size(); ++i) segments.emplace_back(bp[i], bp[i + 1]);
    } else {
        if (quad.samples < 1) throw ConfigurationError("mortar: sample count must be positive");
        for (std::size_t i = 0; i + 1 < sb.size(); ++i) segments.emplace_back(sb[i], sb[i + 1]);
    }
    const int ng = ts.degree() + tm.degree() + 1;
    const int ad = along_direction(slave_side);
    std::vector<TracePoint> out;
    for (const auto& [a, b] : segments) {
        QuadratureRule rule;
        if (quad.kind == QuadratureKind::Merged) {
            rule = gauss_legendre(ng, a, b);
        } else {
            rule = midpoint_rule(quad.samples, a, b);
        }
        const double mid = 0.5 * (a + b);
        const int e = static_cast<int>(std::upper_bound(sb.begin(), sb.end(), mid) - sb.begin()) - 1;
        for (std::size_t g = 0; g < rule.points.size(); ++g) {
            double w = rule.weights[g];
            if (quad.measure == Measure::Physical) {
                const auto xi = side_point(slave, slave_side, rule.points[g]);
                w *= slave.jacobian(xi).col(ad).norm();
            }
            out.push_back({rule.points[g], w, e});
        }
    }
    return out;
}

/// Slave outward unit normal at a side point.
Eigen::VectorXd outward_normal(const PointData& pd, int side) {
    const double sign = side % 2 == 0 ? -1.0 : 1.0;
    return (sign * pd.J.inverse().transpose().col(side / 2)).normalized();
}

ConstraintBlock assemble_block(const Patch& slave, const Patch& master, const Interface& iface,
                               const MortarQuadrature& quad, bool normal_derivative) {
    check_side(slave, iface.slave_side);
    check_side(master, iface.master_side);
    const PiecewiseBasis mult = multiplier_basis(slave, iface);
    const int nm = mult.size();
    Triplets ds;
    Triplets dm;
    double guess = std::numeric_limits<double>::quiet_NaN();
    for (const TracePoint& tp : interface_points(slave, iface.slave_side, master, iface.master_side, quad)) {
        const auto xs = side_point(slave, iface.slave_side, tp.t);
        const PointData ps = slave.evaluate(xs, normal_derivative);
        guess = project_to_side(master, iface.master_side, ps.x, guess);
        const auto xm = side_point(master, iface.master_side, guess);
        const PointData pm = master.evaluate(xm, normal_derivative);
        const auto& piece = mult.pieces()[static_cast<std::size_t>(tp.element)];
        const Eigen::VectorXd psi = mult.eval_on(tp.element, tp.t);
        Eigen::VectorXd vs = ps.R;
        Eigen::VectorXd vm = pm.R;
        if (normal_derivative) {
            const Eigen::VectorXd n = outward_normal(ps, iface.slave_side);
            vs = ps.dR_dx.transpose() * n;
            vm = pm.dR_dx.transpose() * n;
        }
        for (std::size_t i = 0; i < piece.functions.size(); ++i) {
            const double wi = tp.weight * psi[static_cast<Eigen::Index>(i)];
            if (wi == 0.0) continue;
            for (std::size_t a = 0; a < ps.indices.size(); ++a) {
                ds.emplace_back(piece.functions[i], static_cast<int>(ps.indices[a]), wi * vs[static_cast<Eigen::Index>(a)]);
            }
            for (std::size_t a = 0; a < pm.indices.size(); ++a) {
                dm.emplace_back(piece.functions[i], static_cast<int>(pm.indices[a]), wi * vm[static_cast<Eigen::Index>(a)]);
            }
        }
    }
    ConstraintBlock blk;
    blk.slave.resize(nm, slave.num_basis());
    blk.master.resize(nm, master.num_basis());
    blk.slave.setFromTriplets(ds.begin(), ds.end());
    blk.master.setFromTriplets(dm.begin(), dm.end());
    const int first = iface.modify_start ? 1 : 0;
    const int fd = iface.slave_side / 2;
    const int ad = along_direction(iface.slave_side);
    const int depth = normal_derivative ? 1 : 0;
    const int row = iface.slave_side % 2 == 0 ? depth : slave.num_basis(fd) - 1 - depth;
    for (int i = 0; i < nm; ++i) {
        const int k = i + first;
        blk.paired_trace.push_back(k);
        std::array<int, 3> ijk{0, 0, 0};
        ijk[static_cast<std::size_t>(fd)] = row;
        ijk[static_cast<std::size_t>(ad)] = k;
        blk.paired_basis.push_back(slave.index(ijk));
    }
    return blk;
}

}  // namespace

const KnotVector& side_trace(const Patch& patch, int side) {
    check_side(patch, side);
    return patch.space(along_direction(side)).knots();
}

PiecewiseBasis multiplier_basis(const Patch& slave, const Interface& iface) {
    const KnotVector& trace = side_trace(slave, iface.slave_side);
    PiecewiseBasis basis;
    CrosspointModification start;
    CrosspointModification end;
    const int p = trace.degree();
    if (iface.kind == MultiplierKind::Standard) {
        basis = standard_basis(trace);
        if (iface.modify_start || iface.modify_end) start = end = crosspoint_matrix(p, 1);
    } else {
        basis = make_dual_basis(trace, iface.kind == MultiplierKind::DualGlued ? DualStage::Glued : DualStage::Optimal).basis;
        if (iface.modify_start) start = dual_crosspoint_matrix(basis, 1, End::Left);
        if (iface.modify_end) end = dual_crosspoint_matrix(basis, 1, End::Right);
    }
    if (iface.modify_start) basis = apply_crosspoint_modification(basis, start, End::Left);
    if (iface.modify_end) basis = apply_crosspoint_modification(basis, end, End::Right);
    return basis;
}

std::vector<double> merge_interface_mesh(const Patch& slave, int slave_side, const Patch& master, int master_side) {
    const KnotVector& ts = side_trace(slave, slave_side);
    const KnotVector& tm = side_trace(master, master_side);
    std::vector<double> pts = ts.breakpoints();
    double guess = std::numeric_limits<double>::quiet_NaN();
    for (double eta : tm.breakpoints()) {
        guess = project_to_side(slave, slave_side, side_map(master, master_side, eta), guess);
        pts.push_back(guess);
    }
    std::sort(pts.begin(), pts.end());
    const double tol = 1e-12 * (ts.upper() - ts.lower());
    std::vector<double> out;
    for (double v : pts) {
        if (out.empty() || v - out.back() > tol) out.push_back(v);
    }
    out.front() = ts.lower();
    out.back() = ts.upper();
    return out;
}

ConstraintBlock assemble_c0(const Patch& slave, const Patch& master, const Interface& iface, const MortarQuadrature& quad) {
    return assemble_block(slave, master, iface, quad, false);
}

ConstraintBlock assemble_c1(const Patch& slave, const Patch& master, const Interface& iface, const MortarQuadrature& quad) {
    const int p = side_trace(slave, iface.slave_side).degree();
    if (p < 2) {
        std::ostringstream os;
        os << "C1 mortar coupling needs trace degree >= 2, got " << p;
        throw UnsupportedInputError(os.str());
    }
    Interface c1 = iface;
    c1.kind = MultiplierKind::DualGlued;
    return assemble_block(slave, master, c1, quad, true);
}

MortarCoupling assemble_coupling(const ContinuumModel& model, const std::vector<Interface>& interfaces,
                                 const MortarQuadrature& quad) {
    MortarCoupling out;
    const int nc = model.ncomp();
    Triplets tr;
    int row = 0;
    for (const Interface& iface : interfaces) {
        const int np = static_cast<int>(model.patches().size());
        if (iface.slave_patch < 0 || iface.slave_patch >= np || iface.master_patch < 0 || iface.master_patch >= np ||
            iface.slave_patch == iface.master_patch) {
            throw ConfigurationError("mortar: interface refers to invalid patches");
        }
        ConstraintBlock blk = assemble_c0(model.patch(iface.slave_patch), model.patch(iface.master_patch), iface, quad);
        const int nm = static_cast<int>(blk.slave.rows());
        for (int c = 0; c < nc; ++c) {
            for (int k = 0; k < blk.slave.outerSize(); ++k) {
                for (SpMat::InnerIterator it(blk.slave, k); it; ++it) {
                    tr.emplace_back(row + static_cast<int>(it.row()) * nc + c, model.dof(iface.slave_patch, static_cast<int>(it.col()), c), it.value());
                }
            }
            for (int k = 0; k < blk.master.outerSize(); ++k) {
                for (SpMat::InnerIterator it(blk.master, k); it; ++it) {
                    tr.emplace_back(row + static_cast<int>(it.row()) * nc + c, model.dof(iface.master_patch, static_cast<int>(it.col()), c), -it.value());
                }
            }
        }
        for (int i = 0; i < nm; ++i) {
            for (int c = 0; c < nc; ++c) out.slave_dofs.push_back(model.dof(iface.slave_patch, blk.paired_basis[static_cast<std::size_t>(i)], c));
        }
        row += nm * nc;
        out.blocks.push_back(std::move(blk));
    }
    out.B.resize(row, model.num_dofs());
    out.B.setFromTriplets(tr.begin(), tr.end());
    return out;
}

CondensedMap condense(const SpMat& B, const Eigen::VectorXd& c, const std::vector<int>& slave_dofs, int ndof) {
    const auto nrows = static_cast<int>(B.rows());
    if (static_cast<int>(slave_dofs.size()) != nrows) throw DomainError("condense: one slave dof per constraint row is required");
    if (B.cols() != ndof || c.size() != nrows) throw DomainError("condense: dimension mismatch");
    CondensedMap map;
    map.reduced.assign(static_cast<std::size_t>(ndof), 0);
    std::vector<int> slave_pos(static_cast<std::size_t>(ndof), -1);
    for (int k = 0; k < nrows; ++k) {
        const int d = slave_dofs[static_cast<std::size_t>(k)];
        if (d < 0 || d >= ndof || slave_pos[static_cast<std::size_t>(d)] >= 0) throw DomainError("condense: slave dofs must be distinct and in range");
        slave_pos[static_cast<std::size_t>(d)] = k;
    }
    for (int d = 0; d < ndof; ++d) {
        if (slave_pos[static_cast<std::size_t>(d)] >= 0) {
            map.reduced[static_cast<std::size_t>(d)] = -1;
        } else {
            map.reduced[static_cast<std::size_t>(d)] = static_cast<int>(map.free_dofs.size());
            map.free_dofs.push_back(d);
        }
    }
    const auto nfree = static_cast<int>(map.free_dofs.size());

    // Split B into the slave block and the columns of the remaining dofs that it touches.
    Triplets ts;
    std::vector<int> other_cols;
    std::vector<int> other_pos(static_cast<std::size_t>(ndof), -1);
    Triplets to;
    for (int j = 0; j < B.outerSize(); ++j) {
        for (SpMat::InnerIterator it(B, j); it; ++it) {
            if (it.value() == 0.0) continue;
            const int col = static_cast<int>(it.col());
            const int sp = slave_pos[static_cast<std::size_t>(col)];
            if (sp >= 0) {
                ts.emplace_back(static_cast<int>(it.row()), sp, it.value());
            } else {
                int& op = other_pos[static_cast<std::size_t>(col)];
                if (op < 0) {
                    op = static_cast<int>(other_cols.size());
                    other_cols.push_back(col);
                }
                to.emplace_back(static_cast<int>(it.row()), op, it.value());
            }
        }
    }
    SpMat Bs(nrows, nrows);
    Bs.setFromTriplets(ts.begin(), ts.end());
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nrows, static_cast<Eigen::Index>(other_cols.size()) + 1);
    for (const auto& t : to) rhs(t.row(), t.col()) += t.value();
    rhs.col(rhs.cols() - 1) = c;
    Eigen::MatrixXd X;
    if (nrows > 0) X = sparse_lu_solve(Bs, rhs);

    Triplets tt;
    for (int r = 0; r < nfree; ++r) tt.emplace_back(map.free_dofs[static_cast<std::size_t>(r)], r, 1.0);
    map.g = Eigen::VectorXd::Zero(ndof);
    for (int k = 0; k < nrows; ++k) {
        const int d = slave_dofs[static_cast<std::size_t>(k)];
        const double scale = X.row(k).head(X.cols() - 1).cwiseAbs().maxCoeff();
        for (std::size_t o = 0; o < other_cols.size(); ++o) {
            const double v = X(k, static_cast<Eigen::Index>(o));
            if (std::abs(v) > 1e-15 * scale) tt.emplace_back(d, map.reduced[static_cast<std::size_t>(other_cols[o])], -v);
        }
        map.g[d] = X(k, X.cols() - 1);
    }
    map.T.resize(ndof, nfree);
    map.T.setFromTriplets(tt.begin(), tt.end());
    return map;
}

// ============================================================================
// Condensed problem
// ============================================================================

CondensedMortarProblem::CondensedMortarProblem(const ContinuumModel& model, const MortarCoupling& coupling,
                                               DirichletSet dirichlet, Eigen::VectorXd external, const ScalarField* source)
    : model_(model),
      map_(condense(coupling.B, Eigen::VectorXd::Zero(coupling.B.rows()), coupling.slave_dofs, model.num_dofs())),
      external_(std::move(external)),
      source_(source) {
    if (external_.size() == 0) external_ = Eigen::VectorXd::Zero(model.num_dofs());
    if (external_.size() != model.num_dofs()) throw DomainError("mortar problem: external load has wrong size");
    const auto nfree = static_cast<int>(map_.free_dofs.size());
    fixed_.assign(static_cast<std::size_t>(nfree), 0);
    fixed_values_ = Eigen::VectorXd::Zero(nfree);
    if (dirichlet.fixed.empty()) return;
    for (int d = 0; d < model.num_dofs(); ++d) {
        if (!dirichlet.fixed[static_cast<std::size_t>(d)]) continue;
        const int r = map_.reduced[static_cast<std::size_t>(d)];
        if (r < 0) {
            std::ostringstream os;
            os << "mortar: dof " << d << " is both prescribed and a condensed slave dof; "
               << "modify the multiplier space at crosspoints on Dirichlet boundaries";
            throw ConfigurationError(os.str());
        }
        fixed_[static_cast<std::size_t>(r)] = 1;
        fixed_values_[r] = dirichlet.values[d];
    }
}

Eigen::VectorXd CondensedMortarProblem::initial_state() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fixed_.size()));
    for (std::size_t i = 0; i < fixed_.size(); ++i) {
        if (fixed_[i]) v[static_cast<Eigen::Index>(i)] = fixed_values_[static_cast<Eigen::Index>(i)];
    }
    return v;
}

Eigen::VectorXd CondensedMortarProblem::expand(const Eigen::VectorXd& v) const { return map_.T * v + map_.g; }

Eigen::VectorXd CondensedMortarProblem::residual(const Eigen::VectorXd& v) {
    const Eigen::VectorXd u = expand(v);
    Eigen::VectorXd r;
    if (source_) {
        const double s = load_;
        const ScalarField* src = source_;
        const ScalarField scaled = [src, s](const Eigen::VectorXd& x) { return s * (*src)(x); };
        model_.assemble(u, &r, nullptr, &scaled);
    } else {
        model_.assemble(u, &r, nullptr);
    }
    r -= load_ * external_;
    Eigen::VectorXd rr = map_.T.transpose() * r;
    for (std::size_t i = 0; i < fixed_.size(); ++i) {
        if (fixed_[i]) rr[static_cast<Eigen::Index>(i)] = 0.0;
    }
    return rr;
}

SpMat CondensedMortarProblem::jacobian(const Eigen::VectorXd& v) {
    SpMat K;
    model_.assemble(expand(v), nullptr, &K);
    SpMat Kr = map_.T.transpose() * K * map_.T;
    constrain_rows_cols(Kr, fixed_);
    return Kr;
}

Eigen::VectorXd solve_condensed(const ContinuumModel& model, const MortarCoupling& coupling, const DirichletSet& dirichlet,
                                const Eigen::VectorXd& external, const ScalarField* source, const NewtonConfig& config,
                                SolveReport* report) {
    CondensedMortarProblem prob(model, coupling, dirichlet, external, source);
    Eigen::VectorXd v = prob.initial_state();
    const SolveReport rep = newton_solve(prob, v, config);
    if (report) *report = rep;
    return prob.expand(v);
}

SaddleSolution solve_linear_saddle(const ContinuumModel& model, const MortarCoupling& coupling,
                                   const DirichletSet& dirichlet, const Eigen::VectorXd& external,
                                   const ScalarField* source) {
    const int n = model.num_dofs();
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(n);
    std::vector<char> fixed = dirichlet.fixed;
    if (fixed.empty()) fixed.assign(static_cast<std::size_t>(n), 0);
    else dirichlet.impose(u0);
    Eigen::VectorXd r;
    SpMat K;
    model.assemble(u0, &r, &K, source);
    if (external.size() == n) r -= external;
    for (int i = 0; i < n; ++i) {
        if (fixed[static_cast<std::size_t>(i)]) r[i] = 0.0;
    }
    constrain_rows_cols(K, fixed);
    SpMat B = coupling.B;
    const Eigen::VectorXd g = -(B * u0);
    constrain_cols(B, fixed);
    SaddleSolution sol = solve_saddle(K, B, -r, g);
    sol.x += u0;
    return sol;
}

}  // namespace miga
