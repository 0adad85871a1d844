#include "miga/sparse.hpp"

#include "miga/errors.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/SparseLU>

#include <algorithm>
#include <sstream>

namespace miga {

SparseAssembler::SparseAssembler(int rows, int cols, const std::vector<std::vector<int>>& element_dofs) {
    std::vector<std::vector<int>> colrows(static_cast<std::size_t>(cols));
    for (const auto& dofs : element_dofs) {
        for (int c : dofs) {
            auto& v = colrows[static_cast<std::size_t>(c)];
            v.insert(v.end(), dofs.begin(), dofs.end());
        }
    }
    Eigen::VectorXi nnz(cols);
    for (int c = 0; c < cols; ++c) {
        auto& v = colrows[static_cast<std::size_t>(c)];
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        nnz[c] = static_cast<int>(v.size());
    }
    pattern_.resize(rows, cols);
    pattern_.reserve(nnz);
    for (int c = 0; c < cols; ++c) {
        for (int r : colrows[static_cast<std::size_t>(c)]) pattern_.insert(r, c) = 0.0;
    }
    pattern_.makeCompressed();
}

void SparseAssembler::add(SpMat& K, const std::vector<int>& dofs, const Eigen::MatrixXd& ke) const {
    const auto n = dofs.size();
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return dofs[static_cast<std::size_t>(a)] < dofs[static_cast<std::size_t>(b)]; });
    const int* outer = K.outerIndexPtr();
    const int* inner = K.innerIndexPtr();
    double* val = K.valuePtr();
    for (std::size_t jb = 0; jb < n; ++jb) {
        const int c = dofs[jb];
        int pos = outer[c];
        const int end = outer[c + 1];
        for (std::size_t ia = 0; ia < n; ++ia) {
            const int a = order[ia];
            const int r = dofs[static_cast<std::size_t>(a)];
            while (pos < end && inner[pos] < r) ++pos;
            if (pos == end || inner[pos] != r) throw InvariantError("sparse assembler: entry outside pattern");
            val[pos] += ke(a, static_cast<Eigen::Index>(jb));
        }
    }
}

void constrain_rows_cols(SpMat& K, const std::vector<char>& fixed) {
    for (int c = 0; c < K.outerSize(); ++c) {
        for (SpMat::InnerIterator it(K, c); it; ++it) {
            if (fixed[static_cast<std::size_t>(it.row())] || fixed[static_cast<std::size_t>(c)]) {
                it.valueRef() = (it.row() == c) ? 1.0 : 0.0;
            }
        }
    }
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (fixed[i] && K.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) != 1.0) {
            K.coeffRef(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
        }
    }
}

void constrain_cols(SpMat& B, const std::vector<char>& fixed) {
    for (int c = 0; c < B.outerSize(); ++c) {
        if (!fixed[static_cast<std::size_t>(c)]) continue;
        for (SpMat::InnerIterator it(B, c); it; ++it) it.valueRef() = 0.0;
    }
}

Eigen::MatrixXd sparse_lu_solve(const SpMat& A, const Eigen::MatrixXd& rhs) {
    SpMat Ac = A;
    Ac.prune(0.0);
    Ac.makeCompressed();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(Ac);
    if (lu.info() != Eigen::Success) {
        std::ostringstream os;
        os << "sparse LU factorization failed: " << lu.lastErrorMessage();
        throw SingularSystemError(os.str());
    }
    Eigen::MatrixXd x = lu.solve(rhs);
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    const double res = (Ac * x - rhs).cwiseAbs().maxCoeff();
    if (!x.allFinite() || res > 1e-6 * scale) {
        std::ostringstream os;
        os << "sparse LU solve inaccurate (residual " << res << "), system is singular or near-singular";
        throw SingularSystemError(os.str());
    }
    return x;
}

struct CholeskySolver::Impl {
    Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower> llt;
    bool analyzed = false;
    Eigen::Index n = -1;
    Eigen::Index nnz = -1;
};

CholeskySolver::CholeskySolver() : impl_(std::make_unique<Impl>()) {}
CholeskySolver::~CholeskySolver() = default;

void CholeskySolver::factorize(const SpMat& A) {
    if (!impl_->analyzed || impl_->n != A.rows() || impl_->nnz != A.nonZeros()) {
        impl_->llt.analyzePattern(A);
        impl_->analyzed = true;
        impl_->n = A.rows();
        impl_->nnz = A.nonZeros();
    }
    impl_->llt.factorize(A);
    if (impl_->llt.info() != Eigen::Success) throw SingularSystemError("Cholesky factorization failed (matrix not positive definite)");
}

Eigen::MatrixXd CholeskySolver::solve(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd x = impl_->llt.solve(rhs);
    if (impl_->llt.info() != Eigen::Success || !x.allFinite()) throw SingularSystemError("Cholesky solve failed");
    return x;
}

SpMat block_matrix(const SpMat& A, const SpMat& B, const SpMat& C, const SpMat& D) {
    const Eigen::Index r0 = std::max(A.rows(), B.rows());
    const Eigen::Index c0 = std::max(A.cols(), C.cols());
    const Eigen::Index r1 = std::max(C.rows(), D.rows());
    const Eigen::Index c1 = std::max(B.cols(), D.cols());
    Triplets t;
    t.reserve(static_cast<std::size_t>(A.nonZeros() + B.nonZeros() + C.nonZeros() + D.nonZeros()));
    auto put = [&](const SpMat& M, Eigen::Index ro, Eigen::Index co) {
        for (int c = 0; c < M.outerSize(); ++c) {
            for (SpMat::InnerIterator it(M, c); it; ++it) t.emplace_back(static_cast<int>(it.row() + ro), static_cast<int>(c + co), it.value());
        }
    };
    put(A, 0, 0);
    put(B, 0, c0);
    put(C, r0, 0);
    put(D, r0, c0);
    SpMat out(r0 + r1, c0 + c1);
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

}  // namespace miga
