#include "miga/spline.hpp"

#include "miga/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace miga {

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

// ============================================================================
// KnotVector
// ============================================================================

KnotVector::KnotVector(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
    if (degree_ < 0) throw InvariantError("knot vector: negative degree");
    const int p = degree_;
    if (static_cast<int>(knots_.size()) < 2 * (p + 1)) {
        std::ostringstream os;
        os << "knot vector: " << knots_.size() << " knots cannot carry degree " << p
           << " (need n >= p+1 basis functions)";
        throw InvariantError(os.str());
    }
    int multiplicity = 1;
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (!(knots_[i] >= knots_[i - 1])) throw InvariantError("knot vector: knots must be non-decreasing");
        multiplicity = knots_[i] == knots_[i - 1] ? multiplicity + 1 : 1;
        if (multiplicity > p + 1) throw InvariantError("knot vector: knot multiplicity exceeds p+1");
    }
    if (!(upper() > lower())) throw InvariantError("knot vector: empty parametric domain");
}

KnotVector KnotVector::open_uniform(int degree, int elements, double a, double b) {
    if (elements < 1) throw InvariantError("open_uniform: need at least one element");
    std::vector<double> k;
    k.reserve(static_cast<std::size_t>(elements + 2 * degree + 1));
    for (int i = 0; i < degree; ++i) k.push_back(a);
    for (int e = 0; e <= elements; ++e) {
        k.push_back(e == elements ? b : a + (b - a) * static_cast<double>(e) / elements);
    }
    for (int i = 0; i < degree; ++i) k.push_back(b);
    return KnotVector(std::move(k), degree);
}

bool KnotVector::is_open() const {
    const int p = degree_;
    for (int i = 1; i <= p; ++i) {
        if (knots_[i] != knots_[0]) return false;
        if (knots_[knots_.size() - 1 - i] != knots_.back()) return false;
    }
    return true;
}

std::vector<double> KnotVector::breakpoints() const {
    std::vector<double> out;
    for (int i = degree_; i <= num_basis(); ++i) {
        if (out.empty() || knots_[i] > out.back()) out.push_back(knots_[i]);
    }
    return out;
}

std::vector<int> KnotVector::element_spans() const {
    std::vector<int> spans;
    for (int i = degree_; i < num_basis(); ++i) {
        if (knots_[i] < knots_[i + 1]) spans.push_back(i);
    }
    return spans;
}

KnotVector KnotVector::with_inserted(const std::vector<double>& values) const {
    std::vector<double> k = knots_;
    k.insert(k.end(), values.begin(), values.end());
    std::sort(k.begin(), k.end());
    return KnotVector(std::move(k), degree_);
}

KnotVector KnotVector::refined_uniform(int levels) const {
    KnotVector kv = *this;
    for (int l = 0; l < levels; ++l) {
        std::vector<double> mids;
        for (int s : kv.element_spans()) mids.push_back(0.5 * (kv.knots_[s] + kv.knots_[s + 1]));
        kv = kv.with_inserted(mids);
    }
    return kv;
}

// ============================================================================
// SplineSpace
// ============================================================================

SplineSpace::SplineSpace(KnotVector kv)
    : kv_(std::move(kv)), weights_(Eigen::VectorXd::Ones(kv_.num_basis())) {}

SplineSpace::SplineSpace(KnotVector kv, Eigen::VectorXd weights)
    : kv_(std::move(kv)), weights_(std::move(weights)) {
    if (weights_.size() != kv_.num_basis()) throw InvariantError("spline space: one weight per basis function required");
    if ((weights_.array() <= 0.0).any()) throw InvariantError("spline space: weights must be strictly positive");
    rational_ = (weights_.array() != 1.0).any();
}

// ============================================================================
// Evaluation
// ============================================================================

int find_span(const KnotVector& kv, double xi) {
    const double lo = kv.lower();
    const double hi = kv.upper();
    const double tol = 1e-12 * (hi - lo);
    if (xi < lo - tol || xi > hi + tol || std::isnan(xi)) {
        std::ostringstream os;
        os << "find_span: parameter " << xi << " outside [" << lo << ", " << hi << "]";
        throw DomainError(os.str());
    }
    const int n = kv.num_basis();
    if (xi >= hi) {
        int i = n - 1;
        while (kv[i] >= kv[i + 1]) --i;
        return i;
    }
    if (xi <= lo) xi = lo;
    const auto& k = kv.knots();
    const auto it = std::upper_bound(k.begin(), k.end(), xi);
    int i = static_cast<int>(it - k.begin()) - 1;
    return std::clamp(i, kv.degree(), n - 1);
}

Eigen::VectorXd eval_basis(const KnotVector& kv, double xi) {
    const int p = kv.degree();
    const int span = find_span(kv, xi);
    xi = std::clamp(xi, kv.lower(), kv.upper());
    Eigen::VectorXd N(p + 1);
    std::vector<double> left(p + 1), right(p + 1);
    N[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = xi - kv[span + 1 - j];
        right[j] = kv[span + j] - xi;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = safe_div(N[r], right[r + 1] + left[j - r]);
            N[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        N[j] = saved;
    }
    return N;
}

Eigen::MatrixXd eval_basis_derivs(const KnotVector& kv, double xi, int k) {
    return eval_basis_derivs(kv, find_span(kv, xi), xi, k);
}

Eigen::MatrixXd eval_basis_derivs(const KnotVector& kv, int span, double xi, int k) {
    const int p = kv.degree();
    if (k < 0 || k > p) {
        std::ostringstream os;
        os << "eval_basis_derivs: derivative order " << k << " not in [0, " << p << "]";
        throw DomainError(os.str());
    }
    xi = std::clamp(xi, kv.lower(), kv.upper());
    Eigen::MatrixXd ndu(p + 1, p + 1);
    std::vector<double> left(p + 1), right(p + 1);
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = xi - kv[span + 1 - j];
        right[j] = kv[span + j] - xi;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[r + 1] + left[j - r];
            const double temp = safe_div(ndu(r, j - 1), ndu(j, r));
            ndu(r, j) = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu(j, j) = saved;
    }
    Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(k + 1, p + 1);
    for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

    Eigen::MatrixXd a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
        int s1 = 0;
        int s2 = 1;
        a(0, 0) = 1.0;
        for (int kk = 1; kk <= k; ++kk) {
            double d = 0.0;
            const int rk = r - kk;
            const int pk = p - kk;
            if (r >= kk) {
                a(s2, 0) = safe_div(a(s1, 0), ndu(pk + 1, rk));
                d = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? kk - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = safe_div(a(s1, j) - a(s1, j - 1), ndu(pk + 1, rk + j));
                d += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, kk) = safe_div(-a(s1, kk - 1), ndu(pk + 1, r));
                d += a(s2, kk) * ndu(r, pk);
            }
            ders(kk, r) = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int kk = 1; kk <= k; ++kk) {
        ders.row(kk) *= factor;
        factor *= (p - kk);
    }
    return ders;
}

Eigen::MatrixXd nurbs_eval(const SplineSpace& space, double xi, int k) {
    const KnotVector& kv = space.knots();
    const int span = find_span(kv, xi);
    Eigen::MatrixXd ders = eval_basis_derivs(kv, span, xi, k);
    if (!space.is_rational()) return ders;
    const int p = kv.degree();
    std::vector<MultiIndex> orders;
    for (int r = 0; r <= k; ++r) orders.push_back({r, 0, 0});
    rationalize(ders, orders, space.weights().segment(span - p, p + 1));
    return ders;
}

std::vector<double> greville(const KnotVector& kv) {
    const int p = kv.degree();
    const int n = kv.num_basis();
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (p == 0) {
            g[i] = 0.5 * (kv[i] + kv[i + 1]);
            continue;
        }
        double s = 0.0;
        for (int j = 1; j <= p; ++j) s += kv[i + j];
        g[i] = s / p;
    }
    return g;
}

Eigen::MatrixXd collocation_matrix(const KnotVector& kv, std::span<const double> points) {
    const int p = kv.degree();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points.size()), kv.num_basis());
    for (std::size_t r = 0; r < points.size(); ++r) {
        const int span = find_span(kv, points[r]);
        const Eigen::VectorXd N = eval_basis(kv, points[r]);
        for (int j = 0; j <= p; ++j) A(static_cast<Eigen::Index>(r), span - p + j) = N[j];
    }
    return A;
}

Eigen::MatrixXd knot_insertion_matrix(const KnotVector& coarse, const KnotVector& fine) {
    const int p = coarse.degree();
    if (fine.degree() != p) throw DomainError("knot_insertion_matrix: degree mismatch");
    // Every coarse knot must appear in the fine vector with at least the same multiplicity.
    {
        std::map<double, int> cnt;
        for (double t : fine.knots()) ++cnt[t];
        for (double t : coarse.knots()) {
            if (--cnt[t] < 0) throw DomainError("knot_insertion_matrix: fine knots do not contain coarse knots");
        }
    }
    const int nc = coarse.num_basis();
    const int nf = fine.num_basis();
    const auto& t = coarse.knots();
    const auto& tau = fine.knots();
    const int m = static_cast<int>(t.size());
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nc, nf);
    std::vector<double> alpha(static_cast<std::size_t>(m)), next(static_cast<std::size_t>(m));
    for (int j = 0; j < nf; ++j) {
        // Discrete B-splines alpha_{i,k}(j) by the Oslo recursion.
        for (int i = 0; i + 1 < m; ++i) alpha[i] = (t[i] <= tau[j] && tau[j] < t[i + 1]) ? 1.0 : 0.0;
        alpha[m - 1] = 0.0;
        for (int k = 1; k <= p; ++k) {
            const double x = tau[j + k];
            for (int i = 0; i + k + 1 < m; ++i) {
                const double w1 = safe_div(x - t[i], t[i + k] - t[i]);
                const double w2 = safe_div(t[i + k + 1] - x, t[i + k + 1] - t[i + 1]);
                next[i] = w1 * alpha[i] + w2 * alpha[i + 1];
            }
            for (int i = m - k - 1; i < m; ++i) next[i] = 0.0;
            std::swap(alpha, next);
        }
        for (int i = 0; i < nc; ++i) S(i, j) = alpha[i];
    }
    return S;
}

SubdivisionMatrix subdivide(const KnotVector& kv) {
    if (!kv.is_open()) throw UnsupportedInputError("subdivide: open knot vector required");
    const auto bp = kv.breakpoints();
    const double h = bp[1] - bp[0];
    for (std::size_t i = 1; i + 1 < bp.size(); ++i) {
        if (std::abs((bp[i + 1] - bp[i]) - h) > 1e-12 * (kv.upper() - kv.lower())) {
            throw UnsupportedInputError("subdivide: dyadic mask only valid for uniform knot vectors");
        }
    }
    for (int s : kv.element_spans()) {
        // Interior knots must be simple for the mask to apply.
        if (s > kv.degree() && kv[s] == kv[s - 1]) {
            throw UnsupportedInputError("subdivide: repeated interior knots are not supported");
        }
    }
    SubdivisionMatrix out;
    out.coarse = kv;
    out.fine = kv.refined_uniform(1);
    out.entries = knot_insertion_matrix(out.coarse, out.fine);

    const int p = kv.degree();
    const int n = kv.num_basis();
    for (int i = p; i <= n - p - 1; ++i) {
        out.entries.row(i).setZero();
        for (int j = 0; j <= p + 1; ++j) {
            out.entries(i, 2 * i - p + j) = std::ldexp(binomial(p + 1, j), -p);
        }
    }
    return out;
}

// ============================================================================
// Tensor products
// ============================================================================

std::vector<MultiIndex> derivative_multi_indices(int dim, int k) {
    std::vector<MultiIndex> out;
    for (int total = 0; total <= k; ++total) {
        for (int a0 = total; a0 >= 0; --a0) {
            if (dim == 1) {
                if (a0 == total) out.push_back({a0, 0, 0});
                continue;
            }
            for (int a1 = total - a0; a1 >= 0; --a1) {
                const int a2 = total - a0 - a1;
                if (dim == 2 && a2 != 0) continue;
                out.push_back({a0, a1, a2});
            }
        }
    }
    return out;
}

int TensorBasis::row(const MultiIndex& alpha) const {
    for (std::size_t r = 0; r < orders.size(); ++r) {
        if (orders[r] == alpha) return static_cast<int>(r);
    }
    throw DomainError("tensor basis: derivative order not evaluated");
}

void rationalize(Eigen::MatrixXd& ders, const std::vector<MultiIndex>& orders,
                 const Eigen::Ref<const Eigen::VectorXd>& weights) {
    const auto nrow = static_cast<int>(orders.size());
    // A^(alpha) = w * B^(alpha); W^(alpha) = sum_j A^(alpha)_j
    for (int r = 0; r < nrow; ++r) ders.row(r).array() *= weights.transpose().array();
    Eigen::VectorXd W(nrow);
    for (int r = 0; r < nrow; ++r) W[r] = ders.row(r).sum();

    auto find = [&](const MultiIndex& a) {
        for (int r = 0; r < nrow; ++r) {
            if (orders[r] == a) return r;
        }
        return -1;
    };
    // Rows are sorted by total order, so R^(alpha - beta) is final when needed.
    for (int r = 0; r < nrow; ++r) {
        const MultiIndex& a = orders[r];
        for (int b0 = 0; b0 <= a[0]; ++b0) {
            for (int b1 = 0; b1 <= a[1]; ++b1) {
                for (int b2 = 0; b2 <= a[2]; ++b2) {
                    if (b0 == 0 && b1 == 0 && b2 == 0) continue;
                    const int rb = find({b0, b1, b2});
                    const int rab = find({a[0] - b0, a[1] - b1, a[2] - b2});
                    const double c = binomial(a[0], b0) * binomial(a[1], b1) * binomial(a[2], b2);
                    ders.row(r) -= c * W[rb] * ders.row(rab);
                }
            }
        }
        ders.row(r) /= W[0];
    }
}

TensorBasis tensor_basis(std::span<const SplineSpace> spaces, std::span<const double> xi, int k) {
    const int dim = static_cast<int>(spaces.size());
    if (dim < 1 || dim > 3) throw DomainError("tensor_basis: 1 to 3 parametric directions supported");
    if (static_cast<int>(xi.size()) != dim) throw DomainError("tensor_basis: parameter tuple dimension mismatch");

    std::array<Eigen::MatrixXd, 3> uni;
    std::array<int, 3> first{0, 0, 0};
    std::array<int, 3> count{1, 1, 1};
    std::array<std::size_t, 3> stride{1, 1, 1};
    bool rational = false;
    for (int d = 0; d < dim; ++d) {
        const KnotVector& kv = spaces[d].knots();
        const int span = find_span(kv, xi[d]);
        const int kd = std::min(k, kv.degree());
        uni[d] = Eigen::MatrixXd::Zero(k + 1, kv.degree() + 1);
        uni[d].topRows(kd + 1) = eval_basis_derivs(kv, span, xi[d], kd);
        first[d] = span - kv.degree();
        count[d] = kv.degree() + 1;
        if (d > 0) stride[d] = stride[d - 1] * static_cast<std::size_t>(spaces[d - 1].num_basis());
        rational = rational || spaces[d].is_rational();
    }
    for (int d = dim; d < 3; ++d) uni[d] = Eigen::MatrixXd::Ones(k + 1, 1);

    TensorBasis tb;
    tb.dim = dim;
    tb.orders = derivative_multi_indices(dim, k);
    const int nf = count[0] * count[1] * count[2];
    tb.indices.resize(static_cast<std::size_t>(nf));
    tb.values.resize(static_cast<Eigen::Index>(tb.orders.size()), nf);
    Eigen::VectorXd w(nf);
    int f = 0;
    for (int c = 0; c < count[2]; ++c) {
        for (int b = 0; b < count[1]; ++b) {
            for (int a = 0; a < count[0]; ++a, ++f) {
                const std::array<int, 3> loc{a, b, c};
                std::size_t idx = 0;
                double wt = 1.0;
                for (int d = 0; d < dim; ++d) {
                    idx += static_cast<std::size_t>(first[d] + loc[d]) * stride[d];
                    wt *= spaces[d].weights()[first[d] + loc[d]];
                }
                tb.indices[f] = idx;
                w[f] = wt;
                for (std::size_t r = 0; r < tb.orders.size(); ++r) {
                    const MultiIndex& al = tb.orders[r];
                    double v = 1.0;
                    for (int d = 0; d < 3; ++d) {
                        const int ord = al[d];
                        v *= (d < dim) ? uni[d](ord, loc[d]) : (ord == 0 ? 1.0 : 0.0);
                    }
                    tb.values(static_cast<Eigen::Index>(r), f) = v;
                }
            }
        }
    }
    if (rational) rationalize(tb.values, tb.orders, w);
    return tb;
}

}  // namespace miga
