#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>
#include <vector>

namespace miga {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Fixed sparsity pattern built from element connectivities; element matrices are added in place.
class SparseAssembler {
public:
    SparseAssembler() = default;
    SparseAssembler(int rows, int cols, const std::vector<std::vector<int>>& element_dofs);

    /// Zero matrix with the assembled pattern.
    [[nodiscard]] SpMat zero_matrix() const { return pattern_; }

    /// K(dofs, dofs) += ke. Entries outside the pattern are an error.
    void add(SpMat& K, const std::vector<int>& dofs, const Eigen::MatrixXd& ke) const;

private:
    SpMat pattern_;
};

/// Zeroes rows and columns flagged in `fixed` and puts ones on their diagonal.
void constrain_rows_cols(SpMat& K, const std::vector<char>& fixed);
/// Zeroes columns flagged in `fixed`.
void constrain_cols(SpMat& B, const std::vector<char>& fixed);

/// Sparse LU solve with a residual check; throws SingularSystemError.
[[nodiscard]] Eigen::MatrixXd sparse_lu_solve(const SpMat& A, const Eigen::MatrixXd& rhs);

/// Symmetric positive definite factorization backed by CHOLMOD (supernodal).
class CholeskySolver {
public:
    CholeskySolver();
    ~CholeskySolver();
    CholeskySolver(const CholeskySolver&) = delete;
    CholeskySolver& operator=(const CholeskySolver&) = delete;

    /// Symbolic analysis is reused while the pattern is unchanged.
    void factorize(const SpMat& A);
    [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Stacks square or rectangular blocks into one sparse matrix: [[A, B], [C, D]] (any may be empty).
[[nodiscard]] SpMat block_matrix(const SpMat& A, const SpMat& B, const SpMat& C, const SpMat& D);

}  // namespace miga
