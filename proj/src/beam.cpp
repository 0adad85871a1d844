#include "miga/beam.hpp"

#include "miga/errors.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <numbers>
#include <sstream>

namespace miga {

void BeamSection::validate() const {
    if (!(young_modulus > 0.0)) throw ConfigurationError("beam section: Young's modulus must be positive");
    if (!(radius > 0.0)) throw ConfigurationError("beam section: radius must be positive");
    if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) throw ConfigurationError("beam section: Poisson ratio must lie in (-1, 0.5)");
}

double BeamSection::area() const { return std::numbers::pi * radius * radius; }
double BeamSection::second_moment() const { return std::numbers::pi * std::pow(radius, 4) / 4.0; }
double BeamSection::polar_moment() const { return std::numbers::pi * std::pow(radius, 4) / 2.0; }
double BeamSection::circumference() const { return 2.0 * std::numbers::pi * radius; }

Eigen::Vector3d BeamSection::K1() const {
    const double ga = shear_modulus() * area();
    return {ga, ga, young_modulus * area()};
}

Eigen::Vector3d BeamSection::K2() const {
    const double ei = young_modulus * second_moment();
    return {ei, ei, shear_modulus() * polar_moment()};
}

namespace {

template <class T>
Eigen::Matrix<T, 3, 3> skew(const Eigen::Matrix<T, 3, 1>& v) {
    Eigen::Matrix<T, 3, 3> S;
    S << T(0), -v[2], v[1], v[2], T(0), -v[0], -v[1], v[0], T(0);
    return S;
}

template <class T>
Eigen::Matrix<T, 3, 3> rotation(const Eigen::Matrix<T, 4, 1>& q) {
    const Eigen::Matrix<T, 3, 1> v = q.template head<3>();
    const T w = q[3];
    return (w * w - v.dot(v)) * Eigen::Matrix<T, 3, 3>::Identity() + T(2) * v * v.transpose() + T(2) * w * skew(v);
}

template <class T>
Eigen::Matrix<T, 3, 3> rotation_derivative(const Eigen::Matrix<T, 4, 1>& q, const Eigen::Matrix<T, 4, 1>& dq) {
    const Eigen::Matrix<T, 3, 1> v = q.template head<3>();
    const Eigen::Matrix<T, 3, 1> dv = dq.template head<3>();
    const T w = q[3];
    const T dw = dq[3];
    return (T(2) * w * dw - T(2) * v.dot(dv)) * Eigen::Matrix<T, 3, 3>::Identity() +
           T(2) * (dv * v.transpose() + v * dv.transpose()) + T(2) * dw * skew(v) + T(2) * w * skew(dv);
}

template <class T>
struct StrainsT {
    Eigen::Matrix<T, 3, 3> Lam;
    Eigen::Matrix<T, 3, 1> eps;
    Eigen::Matrix<T, 3, 1> kappa;
    Eigen::Matrix<T, 3, 3> A;
};

template <class T>
StrainsT<T> strains(const Eigen::Matrix3d& triad, const Eigen::Matrix<T, 26, 1>& z) {
    const Eigen::Matrix<T, 3, 3> D = triad.cast<T>();
    const Eigen::Matrix<T, 4, 1> q = z.template segment<4>(pv::q);
    const Eigen::Matrix<T, 4, 1> dq = z.template segment<4>(pv::dq);
    StrainsT<T> s;
    // R(q) / |q|^2 is a rotation for every nonzero q; the unit rows fix the scale.
    const T qq = q.dot(q);
    const T dqq = T(2) * q.dot(dq);
    s.Lam = rotation(q) * D / qq;
    const Eigen::Matrix<T, 3, 3> dLam = (rotation_derivative(q, dq) * D - dqq * s.Lam) / qq;
    s.eps = s.Lam.transpose() * z.template segment<3>(pv::dphi) - Eigen::Matrix<T, 3, 1>::UnitZ();
    s.A = s.Lam.transpose() * dLam;
    const Eigen::Matrix<T, 3, 3> W = T(0.5) * (s.A - s.A.transpose());
    s.kappa << W(2, 1), W(0, 2), W(1, 0);
    return s;
}

template <class T>
Eigen::Matrix<T, kr::count, 1> kernel_rows(const BeamSection& sec, const Eigen::Matrix3d& triad,
                                          const Eigen::Matrix<T, 26, 1>& z) {
    const StrainsT<T> s = strains(triad, z);
    const Eigen::Vector3d k1 = sec.K1();
    const Eigen::Vector3d k2 = sec.K2();
    Eigen::Matrix<T, 3, 1> ke;
    Eigen::Matrix<T, 3, 1> kk;
    for (int i = 0; i < 3; ++i) {
        ke[i] = T(k1[i]) * s.eps[i];
        kk[i] = T(k2[i]) * s.kappa[i];
    }
    const Eigen::Matrix<T, 3, 1> n = z.template segment<3>(pv::n);
    const Eigen::Matrix<T, 3, 1> m = z.template segment<3>(pv::m);
    const Eigen::Matrix<T, 3, 1> dphi = z.template segment<3>(pv::dphi);
    const Eigen::Matrix<T, 4, 1> q = z.template segment<4>(pv::q);
    Eigen::Matrix<T, kr::count, 1> r;
    r.template segment<3>(kr::constitutive_n) = n - s.Lam * ke;
    r.template segment<3>(kr::constitutive_m) = m - s.Lam * kk;
    r[kr::unit] = q.dot(q) - T(1);
    r.template segment<3>(kr::force_balance) = z.template segment<3>(pv::dn);
    r.template segment<3>(kr::moment_balance) = z.template segment<3>(pv::dm) + dphi.cross(n);
    r[kr::gauge] = s.Lam.col(0).dot(triad.col(1).cast<T>());
    return r;
}

using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 26, 1>>;

}  // namespace

Eigen::Matrix3d quat_to_rotation(const Eigen::Vector4d& q) {
    const double nq = q.norm();
    if (nq < 1e-12) throw DomainError("quat_to_rotation: degenerate quaternion");
    return rotation<double>(q / nq);
}

Eigen::Vector4d quat_multiply(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    const Eigen::Vector3d va = a.head<3>();
    const Eigen::Vector3d vb = b.head<3>();
    Eigen::Vector4d out;
    out.head<3>() = a[3] * vb + b[3] * va + va.cross(vb);
    out[3] = a[3] * b[3] - va.dot(vb);
    return out;
}

Eigen::Vector4d quat_from_axis_angle(const Eigen::Vector3d& axis, double angle) {
    Eigen::Vector4d q;
    q.head<3>() = std::sin(0.5 * angle) * axis.normalized();
    q[3] = std::cos(0.5 * angle);
    return q;
}

double quat_angle(const Eigen::Vector4d& q) { return 2.0 * std::atan2(q.head<3>().norm(), q[3]); }

KernelResult beam_kernel(const BeamSection& section, const Eigen::Matrix3d& triad, const PointVariables& z) {
    Eigen::Matrix<AD, 26, 1> za;
    for (int i = 0; i < 26; ++i) za[i] = AD(z[i], 26, i);
    const Eigen::Matrix<AD, kr::count, 1> r = kernel_rows<AD>(section, triad, za);
    KernelResult out;
    for (int i = 0; i < kr::count; ++i) {
        out.rows[i] = r[i].value();
        out.dz.row(i) = r[i].derivatives().transpose();
    }
    return out;
}

BeamStrains beam_strains(const Eigen::Matrix3d& triad, const PointVariables& z) {
    const StrainsT<double> s = strains<double>(triad, z);
    BeamStrains out;
    out.eps = s.eps;
    out.kappa = s.kappa;
    out.symmetric_residue = (0.5 * (s.A + s.A.transpose())).norm();
    return out;
}

// ============================================================================
// Discretization
// ============================================================================

BeamModel::BeamModel(KnotVector knots, BeamSection section, Eigen::Vector3d origin, Eigen::Matrix3d triad)
    : kv_(std::move(knots)), section_(section), origin_(std::move(origin)), triad_(std::move(triad)) {
    section_.validate();
    if (!kv_.is_open()) throw ConfigurationError("beam: knot vector must be open");
    if ((triad_.transpose() * triad_ - Eigen::Matrix3d::Identity()).norm() > 1e-10 || triad_.determinant() < 0.0) {
        throw ConfigurationError("beam: reference directors must form a right-handed orthonormal triad");
    }
    const std::vector<double> g = greville(kv_);
    for (double s : g) points_.push_back(basis_at(s));
    colloc_ = collocation_matrix(kv_, g);
}

PointBasis BeamModel::basis_at(double s) const {
    PointBasis b;
    b.s = s;
    const int span = find_span(kv_, s);
    const Eigen::MatrixXd d = eval_basis_derivs(kv_, span, s, 1);
    b.first = span - kv_.degree();
    b.N0 = d.row(0).transpose();
    b.N1 = d.row(1).transpose();
    return b;
}

Eigen::Vector3d BeamModel::reference_position(double s) const { return origin_ + (s - kv_.lower()) * triad_.col(2); }

BeamCoefficients BeamModel::reference_state() const {
    const int n = num_basis();
    BeamCoefficients c;
    c.phi.resize(n, 3);
    const std::vector<double> g = greville(kv_);
    for (int i = 0; i < n; ++i) c.phi.row(i) = reference_position(g[static_cast<std::size_t>(i)]).transpose();
    c.q = Eigen::MatrixXd::Zero(n, 4);
    c.q.col(3).setOnes();
    c.n = Eigen::MatrixXd::Zero(n, 3);
    c.m = Eigen::MatrixXd::Zero(n, 3);
    return c;
}

PointVariables BeamModel::variables(const BeamCoefficients& c, const PointBasis& b) const {
    PointVariables z = PointVariables::Zero();
    const auto np = static_cast<int>(b.N0.size());
    auto accumulate = [&](const Eigen::MatrixXd& coef, int val, int der) {
        for (int i = 0; i < np; ++i) {
            const Eigen::RowVectorXd row = coef.row(b.first + i);
            for (Eigen::Index k = 0; k < row.size(); ++k) {
                z[val + k] += b.N0[i] * row[k];
                z[der + k] += b.N1[i] * row[k];
            }
        }
    };
    accumulate(c.phi, pv::phi, pv::dphi);
    accumulate(c.q, pv::q, pv::dq);
    accumulate(c.n, pv::n, pv::dn);
    accumulate(c.m, pv::m, pv::dm);
    return z;
}

PointVariables BeamModel::variables_at(const BeamCoefficients& c, double s) const { return variables(c, basis_at(s)); }

void scatter_field(Triplets& out, int row0, const Eigen::MatrixXd& dval, const Eigen::MatrixXd& dder, const PointBasis& b,
                   int column_offset, int dim) {
    for (Eigen::Index i = 0; i < b.N0.size(); ++i) {
        const int col0 = column_offset + dim * (b.first + static_cast<int>(i));
        for (Eigen::Index r = 0; r < dval.rows(); ++r) {
            for (int c = 0; c < dim; ++c) {
                const double v = dval(r, c) * b.N0[i] + dder(r, c) * b.N1[i];
                if (v != 0.0) out.emplace_back(row0 + static_cast<int>(r), col0 + c, v);
            }
        }
    }
}

// ============================================================================
// Cantilever
// ============================================================================

CantileverProblem::CantileverProblem(BeamModel model, Eigen::Vector3d end_force, Eigen::Vector3d end_moment)
    : model_(std::move(model)), force_(std::move(end_force)), moment_(std::move(end_moment)) {}

Eigen::VectorXd CantileverProblem::pack(const BeamCoefficients& c) const {
    const int n = model_.num_basis();
    Eigen::VectorXd x(13 * n);
    for (int i = 0; i < n; ++i) {
        x.segment<3>(3 * i) = c.phi.row(i).transpose();
        x.segment<4>(3 * n + 4 * i) = c.q.row(i).transpose();
        x.segment<3>(7 * n + 3 * i) = c.n.row(i).transpose();
        x.segment<3>(10 * n + 3 * i) = c.m.row(i).transpose();
    }
    return x;
}

BeamCoefficients CantileverProblem::unpack(const Eigen::VectorXd& x) const {
    const int n = model_.num_basis();
    if (x.size() != 13 * n) throw DomainError("cantilever: state vector has wrong size");
    BeamCoefficients c;
    c.phi.resize(n, 3);
    c.q.resize(n, 4);
    c.n.resize(n, 3);
    c.m.resize(n, 3);
    for (int i = 0; i < n; ++i) {
        c.phi.row(i) = x.segment<3>(3 * i).transpose();
        c.q.row(i) = x.segment<4>(3 * n + 4 * i).transpose();
        c.n.row(i) = x.segment<3>(7 * n + 3 * i).transpose();
        c.m.row(i) = x.segment<3>(10 * n + 3 * i).transpose();
    }
    return c;
}

void CantileverProblem::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* r, Triplets* jac) const {
    const int n = model_.num_basis();
    const BeamCoefficients c = unpack(x);
    const auto& pts = model_.points();
    const int np = static_cast<int>(pts.size());
    const int off_phi = 0;
    const int off_q = 3 * n;
    const int off_n = 7 * n;
    const int off_m = 10 * n;
    if (r) r->resize(13 * np);
    const Eigen::MatrixXd I3 = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd Z3 = Eigen::MatrixXd::Zero(3, 3);
    for (int k = 0; k < np; ++k) {
        const PointBasis& b = pts[static_cast<std::size_t>(k)];
        const PointVariables z = model_.variables(c, b);
        const KernelResult ker = beam_kernel(model_.section(), model_.triad(), z);
        const int row = 13 * k;
        if (k == 0) {
            if (r) {
                r->segment<3>(row) = z.segment<3>(pv::phi) - model_.origin();
                r->segment<3>(row + 3) = z.segment<3>(pv::q);
            }
            if (jac) {
                scatter_field(*jac, row, I3, Z3, b, off_phi, 3);
                Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(3, 4);
                dq.leftCols(3).setIdentity();
                scatter_field(*jac, row + 3, dq, Eigen::MatrixXd::Zero(3, 4), b, off_q, 4);
            }
        } else if (k == np - 1) {
            if (r) {
                r->segment<3>(row) = z.segment<3>(pv::n) - load_ * force_;
                r->segment<3>(row + 3) = z.segment<3>(pv::m) - load_ * moment_;
            }
            if (jac) {
                scatter_field(*jac, row, I3, Z3, b, off_n, 3);
                scatter_field(*jac, row + 3, I3, Z3, b, off_m, 3);
            }
        } else {
            if (r) {
                r->segment<3>(row) = ker.rows.segment<3>(kr::force_balance);
                r->segment<3>(row + 3) = ker.rows.segment<3>(kr::moment_balance);
            }
            if (jac) {
                const Eigen::MatrixXd d = ker.dz.middleRows(kr::force_balance, 6);
                scatter_field(*jac, row, d.middleCols(pv::phi, 3), d.middleCols(pv::dphi, 3), b, off_phi, 3);
                scatter_field(*jac, row, d.middleCols(pv::q, 4), d.middleCols(pv::dq, 4), b, off_q, 4);
                scatter_field(*jac, row, d.middleCols(pv::n, 3), d.middleCols(pv::dn, 3), b, off_n, 3);
                scatter_field(*jac, row, d.middleCols(pv::m, 3), d.middleCols(pv::dm, 3), b, off_m, 3);
            }
        }
        if (r) r->segment<7>(row + 6) = ker.rows.segment<7>(kr::constitutive_n);
        if (jac) {
            const Eigen::MatrixXd d = ker.dz.middleRows(kr::constitutive_n, 7);
            scatter_field(*jac, row + 6, d.middleCols(pv::phi, 3), d.middleCols(pv::dphi, 3), b, off_phi, 3);
            scatter_field(*jac, row + 6, d.middleCols(pv::q, 4), d.middleCols(pv::dq, 4), b, off_q, 4);
            scatter_field(*jac, row + 6, d.middleCols(pv::n, 3), d.middleCols(pv::dn, 3), b, off_n, 3);
            scatter_field(*jac, row + 6, d.middleCols(pv::m, 3), d.middleCols(pv::dm, 3), b, off_m, 3);
        }
    }
}

Eigen::VectorXd CantileverProblem::residual(const Eigen::VectorXd& x) {
    Eigen::VectorXd r;
    evaluate(x, &r, nullptr);
    return r;
}

SpMat CantileverProblem::jacobian(const Eigen::VectorXd& x) {
    Triplets t;
    evaluate(x, nullptr, &t);
    SpMat J(num_unknowns(), num_unknowns());
    J.setFromTriplets(t.begin(), t.end());
    return J;
}

CantileverResult solve_cantilever(const BeamModel& model, const Eigen::Vector3d& end_force, const Eigen::Vector3d& end_moment,
                                  const NewtonConfig& config) {
    CantileverProblem prob(model, end_force, end_moment);
    Eigen::VectorXd x = prob.pack(model.reference_state());
    CantileverResult out;
    out.report = newton_solve(prob, x, config);
    out.state = prob.unpack(x);
    const PointVariables tip = model.variables_at(out.state, model.knots().upper());
    out.tip_position = tip.segment<3>(pv::phi);
    out.tip_rotation = quat_angle(tip.segment<4>(pv::q));
    for (const PointBasis& b : model.points()) {
        const PointVariables z = model.variables(out.state, b);
        out.max_unit_violation = std::max(out.max_unit_violation, std::abs(z.segment<4>(pv::q).norm() - 1.0));
    }
    return out;
}

}  // namespace miga
