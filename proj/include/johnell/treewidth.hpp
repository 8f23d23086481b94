// Sparse path: fill-reducing ordering, elimination tree, sparse Cholesky of
// the weighted Gram, and per-row quadratic forms that stay on the factor
// pattern. Built for constraint graphs of small width (banded, tree-like).
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "johnell/core.hpp"

namespace johnell {

// Symmetric adjacency of the column-intersection graph of A (the Gram
// pattern), without the diagonal. Neighbor lists are sorted.
struct SparsityPattern {
    int d = 0;
    std::vector<int> ptr;  // size d+1
    std::vector<int> idx;  // neighbor column ids
};

SparsityPattern gram_pattern(const ConstraintMatrix& a);

struct EliminationOrder {
    std::vector<int> perm;  // perm[k] = original column eliminated k-th
    std::vector<int> inv;   // inv[original] = elimination position
};

EliminationOrder natural_order(int d);
// Validates a user permutation (must be a bijection on [0, d)).
EliminationOrder order_from_permutation(std::vector<int> perm);
// Minimum-degree heuristic with smallest-index tie break; returns the natural
// order unchanged on banded patterns.
EliminationOrder fill_reducing_order(const SparsityPattern& pattern);

// Column patterns include the diagonal and are sorted ascending.
struct EliminationTree {
    int d = 0;
    std::vector<int> parent;    // parent[j] = -1 at a root
    std::vector<int> col_ptr;   // size d+1, pattern of L by column
    std::vector<int> col_rows;
    int max_col_nnz = 0;        // tau_hat
};

EliminationTree symbolic_factorization(const SparsityPattern& pattern, const EliminationOrder& order);

// Lower-triangular factor, compressed columns, diagonal entry first per column.
struct SparseCholeskyFactor {
    int d = 0;
    std::vector<int> col_ptr;
    std::vector<int> row_idx;
    std::vector<double> values;
    int max_col_nnz = 0;  // tau_hat

    Eigen::MatrixXd to_dense() const;
};

// Factors P (A^T diag(w) A) P^T = L L^T within the symbolic pattern
// (up-looking). Throws factorization_error naming the original column of a
// nonpositive pivot.
SparseCholeskyFactor numeric_cholesky(const ConstraintMatrix& a, const Eigen::VectorXd& w,
                                      const EliminationOrder& order, const EliminationTree& tree);

// sigma_i = weight_i * ||L^{-1} P a_i||^2 via sparse triangular solves
// restricted to the union of elimination-tree paths of each row's support.
// weights == nullptr means weight_i = 1.
Eigen::VectorXd row_scores_via_cholesky(const SparseCholeskyFactor& factor,
                                        const EliminationOrder& order, const ConstraintMatrix& a,
                                        const Eigen::VectorXd* weights);

// Entries of (L L^T)^{-1} on the factor pattern (reverse recurrence),
// aligned slot-for-slot with factor.values. Every support pair of every row
// of A lies on this pattern, so row forms need nothing outside it.
std::vector<double> inverse_on_factor_pattern(const SparseCholeskyFactor& factor);

// sigma_i = weight_i * (P a_i)^T Z (P a_i) using the on-pattern inverse
// entries; O(nnz(row)^2 log tau) per row.
Eigen::VectorXd row_scores_via_pattern_inverse(const SparseCholeskyFactor& factor,
                                               const std::vector<double>& inverse_values,
                                               const EliminationOrder& order,
                                               const ConstraintMatrix& a,
                                               const Eigen::VectorXd* weights);

// Averaged fixed point with the sparse factorization; the ordering and
// symbolic structure are computed once and reused across iterations. Returns
// the unnormalized average u (its sum is d up to roundoff) and certifies
// sigma_max(u) <= 1 + eps deterministically.
EllipsoidCertificate treewidth_solve(const ConstraintMatrix& a, const SolverConfig& config,
                                     const EliminationOrder* user_order = nullptr,
                                     IterationTrace* trace = nullptr);

}  // namespace johnell
