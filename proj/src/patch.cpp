#include "miga/patch.hpp"

#include "miga/errors.hpp"
#include "miga/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace miga {

Patch::Patch(std::vector<SplineSpace> spaces, Eigen::MatrixXd control_points)
    : spaces_(std::move(spaces)), cp_(std::move(control_points)) {
    if (spaces_.empty() || spaces_.size() > 3) throw InvariantError("patch: 1 to 3 parametric directions supported");
    int n = 1;
    for (std::size_t d = 0; d < spaces_.size(); ++d) {
        shape_[d] = spaces_[d].num_basis();
        n *= shape_[d];
    }
    if (cp_.rows() != n) {
        std::ostringstream os;
        os << "patch: control grid has " << cp_.rows() << " points, basis has " << n;
        throw InvariantError(os.str());
    }
    if (cp_.cols() < dim()) throw InvariantError("patch: physical dimension below parametric dimension");
}

Patch Patch::box(const std::vector<int>& degrees, const std::vector<int>& elements,
                 const std::vector<double>& lower, const std::vector<double>& upper) {
    const std::size_t dim = degrees.size();
    if (elements.size() != dim || lower.size() != dim || upper.size() != dim) {
        throw InvariantError("box patch: inconsistent dimensions");
    }
    std::vector<KnotVector> knots;
    for (std::size_t d = 0; d < dim; ++d) knots.push_back(KnotVector::open_uniform(degrees[d], elements[d], lower[d], upper[d]));
    return box(knots);
}

Patch Patch::box(const std::vector<KnotVector>& knots) {
    std::vector<SplineSpace> spaces;
    std::vector<std::vector<double>> g;
    int n = 1;
    for (const KnotVector& kv : knots) {
        if (!kv.is_open()) throw InvariantError("box patch: knot vectors must be open");
        g.push_back(greville(kv));
        n *= kv.num_basis();
        spaces.emplace_back(kv);
    }
    const std::size_t dim = knots.size();
    Eigen::MatrixXd cp(n, static_cast<Eigen::Index>(dim));
    for (int A = 0; A < n; ++A) {
        int rem = A;
        for (std::size_t d = 0; d < dim; ++d) {
            const int nd = static_cast<int>(g[d].size());
            cp(A, static_cast<Eigen::Index>(d)) = g[d][static_cast<std::size_t>(rem % nd)];
            rem /= nd;
        }
    }
    return Patch(std::move(spaces), std::move(cp));
}

std::array<int, 3> Patch::multi_index(int A) const {
    return {A % shape_[0], (A / shape_[0]) % shape_[1], A / (shape_[0] * shape_[1])};
}

int Patch::index(const std::array<int, 3>& ijk) const {
    return ijk[0] + shape_[0] * (ijk[1] + shape_[1] * ijk[2]);
}

double Patch::diameter() const {
    return (cp_.colwise().maxCoeff() - cp_.colwise().minCoeff()).norm();
}

Eigen::VectorXd Patch::map_point(std::span<const double> xi) const {
    const TensorBasis tb = tensor_basis(spaces_, xi, 0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(sdim());
    for (std::size_t f = 0; f < tb.indices.size(); ++f) {
        x += tb.values(0, static_cast<Eigen::Index>(f)) * cp_.row(static_cast<Eigen::Index>(tb.indices[f])).transpose();
    }
    return x;
}

Eigen::MatrixXd Patch::jacobian(std::span<const double> xi) const {
    return evaluate(xi, dim() == sdim()).J;
}

PointData Patch::evaluate(std::span<const double> xi, bool gradients) const {
    const TensorBasis tb = tensor_basis(spaces_, xi, 1);
    const int nd = dim();
    const auto nf = static_cast<Eigen::Index>(tb.indices.size());
    PointData pd;
    pd.indices = tb.indices;
    pd.R = tb.values.row(0).transpose();
    pd.dR_dxi.resize(nd, nf);
    for (int d = 0; d < nd; ++d) {
        MultiIndex a{0, 0, 0};
        a[static_cast<std::size_t>(d)] = 1;
        pd.dR_dxi.row(d) = tb.values.row(tb.row(a));
    }
    Eigen::MatrixXd local(nf, sdim());
    for (Eigen::Index f = 0; f < nf; ++f) local.row(f) = cp_.row(static_cast<Eigen::Index>(tb.indices[f]));
    pd.x = local.transpose() * pd.R;
    pd.J = local.transpose() * pd.dR_dxi.transpose();
    if (nd == sdim()) {
        pd.detJ = pd.J.determinant();
        if (!(pd.detJ > 0.0)) {
            std::ostringstream os;
            os << "geometric map singular or inverted (det J = " << pd.detJ << ") at xi = (";
            for (std::size_t d = 0; d < xi.size(); ++d) os << (d ? ", " : "") << xi[d];
            os << ")";
            throw SingularMapError(os.str());
        }
        if (gradients) pd.dR_dx = pd.J.transpose().partialPivLu().solve(pd.dR_dxi);
    }
    return pd;
}

std::vector<double> Patch::invert_point(const Eigen::VectorXd& x, std::vector<double> xi) const {
    const int nd = dim();
    if (static_cast<int>(xi.size()) != nd) throw DomainError("invert_point: guess dimension mismatch");
    const double tol = 1e-10 * diameter();
    for (int it = 0; it < 50; ++it) {
        const PointData pd = evaluate(xi, false);
        const Eigen::VectorXd res = x - pd.x;
        if (res.norm() <= tol) return xi;
        // Least-squares step also covers curves and surfaces embedded in higher dimensions.
        const Eigen::VectorXd step = pd.J.colPivHouseholderQr().solve(res);
        double damping = 1.0;
        std::vector<double> trial(xi.size());
        bool moved = false;
        for (int ls = 0; ls < 20; ++ls) {
            for (int d = 0; d < nd; ++d) {
                const KnotVector& kv = space(d).knots();
                trial[static_cast<std::size_t>(d)] =
                    std::clamp(xi[static_cast<std::size_t>(d)] + damping * step[d], kv.lower(), kv.upper());
            }
            if ((x - map_point(trial)).norm() < res.norm()) {
                moved = true;
                break;
            }
            damping *= 0.5;
        }
        if (!moved) break;
        xi = trial;
    }
    if ((x - map_point(xi)).norm() <= tol) return xi;
    std::ostringstream os;
    os << "point inversion failed for x = (" << x.transpose() << ")";
    throw InversionError(os.str());
}

std::vector<Element> Patch::elements() const {
    std::array<std::vector<int>, 3> spans;
    for (int d = 0; d < 3; ++d) {
        spans[static_cast<std::size_t>(d)] =
            d < dim() ? space(d).knots().element_spans() : std::vector<int>{0};
    }
    std::vector<Element> out;
    int id = 0;
    for (int c : spans[2]) {
        for (int b : spans[1]) {
            for (int a : spans[0]) {
                Element e;
                e.id = id++;
                e.spans = {a, b, c};
                for (int d = 0; d < dim(); ++d) {
                    const KnotVector& kv = space(d).knots();
                    const int s = e.spans[static_cast<std::size_t>(d)];
                    e.lower[static_cast<std::size_t>(d)] = kv[static_cast<std::size_t>(s)];
                    e.upper[static_cast<std::size_t>(d)] = kv[static_cast<std::size_t>(s + 1)];
                }
                out.push_back(e);
            }
        }
    }
    return out;
}

std::vector<QuadPoint> Patch::quadrature(const Element& e, const std::array<int, 3>& n) const {
    std::array<QuadratureRule, 3> rules;
    for (int d = 0; d < 3; ++d) {
        const auto ud = static_cast<std::size_t>(d);
        if (d < dim()) {
            rules[ud] = gauss_legendre(n[ud], e.lower[ud], e.upper[ud]);
        } else {
            rules[ud] = QuadratureRule{{0.0}, {1.0}};
        }
    }
    std::vector<QuadPoint> out;
    out.reserve(rules[0].points.size() * rules[1].points.size() * rules[2].points.size());
    for (std::size_t k = 0; k < rules[2].points.size(); ++k) {
        for (std::size_t j = 0; j < rules[1].points.size(); ++j) {
            for (std::size_t i = 0; i < rules[0].points.size(); ++i) {
                QuadPoint q;
                q.xi = {rules[0].points[i], rules[1].points[j], rules[2].points[k]};
                q.weight = rules[0].weights[i] * rules[1].weights[j] * rules[2].weights[k];
                out.push_back(q);
            }
        }
    }
    return out;
}

std::vector<QuadPoint> Patch::quadrature(const Element& e) const {
    std::array<int, 3> n{1, 1, 1};
    for (int d = 0; d < dim(); ++d) n[static_cast<std::size_t>(d)] = space(d).degree() + 1;
    return quadrature(e, n);
}

std::vector<int> Patch::side_indices(int side) const {
    const int d = side / 2;
    if (side < 0 || d >= dim()) throw DomainError("side_indices: invalid side");
    const int fixed = (side % 2 == 0) ? 0 : shape_[static_cast<std::size_t>(d)] - 1;
    std::vector<int> out;
    for (int A = 0; A < num_basis(); ++A) {
        if (multi_index(A)[static_cast<std::size_t>(d)] == fixed) out.push_back(A);
    }
    return out;
}

Eigen::MatrixXd physical_gradient(const Patch& patch, const Eigen::MatrixXd& coeffs, std::span<const double> xi) {
    const PointData pd = patch.evaluate(xi, true);
    if (pd.dR_dx.size() == 0) throw DomainError("physical_gradient: requires a square geometric map");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(coeffs.cols(), patch.sdim());
    for (std::size_t f = 0; f < pd.indices.size(); ++f) {
        g += coeffs.row(static_cast<Eigen::Index>(pd.indices[f])).transpose() *
             pd.dR_dx.col(static_cast<Eigen::Index>(f)).transpose();
    }
    return g;
}

Eigen::VectorXd field_value(const Patch& patch, const Eigen::MatrixXd& coeffs, std::span<const double> xi) {
    const TensorBasis tb = tensor_basis(patch.spaces(), xi, 0);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(coeffs.cols());
    for (std::size_t f = 0; f < tb.indices.size(); ++f) {
        v += tb.values(0, static_cast<Eigen::Index>(f)) * coeffs.row(static_cast<Eigen::Index>(tb.indices[f])).transpose();
    }
    return v;
}

}  // namespace miga
