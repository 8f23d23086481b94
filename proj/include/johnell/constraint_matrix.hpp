// Constraint matrix A of the symmetric polytope {x : -1 <= Ax <= 1}.
// Rows are stored compressed (CSR) with sorted, deduplicated column indices.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace johnell {

struct Triplet {
    int row;
    int col;
    double value;
};

class ConstraintMatrix {
public:
    // Dense row-major input; exact zeros are dropped from storage.
    static ConstraintMatrix from_dense(int n, int d, const std::vector<double>& row_major);
    static ConstraintMatrix from_dense(const Eigen::MatrixXd& a);
    // Duplicate (row, col) entries are summed before validation.
    static ConstraintMatrix from_triplets(int n, int d, std::vector<Triplet> entries);

    int rows() const { return n_; }
    int cols() const { return d_; }
    std::int64_t nnz() const { return static_cast<std::int64_t>(values_.size()); }
    int max_row_nnz() const { return max_row_nnz_; }

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    std::span<const int> row_cols(int i) const {
        return {col_idx_.data() + row_ptr_[i], static_cast<std::size_t>(row_ptr_[i + 1] - row_ptr_[i])};
    }
    std::span<const double> row_vals(int i) const {
        return {values_.data() + row_ptr_[i], static_cast<std::size_t>(row_ptr_[i + 1] - row_ptr_[i])};
    }

    Eigen::MatrixXd to_dense() const;

    // a_i . x for one row.
    double row_dot(int i, const Eigen::VectorXd& x) const;

private:
    ConstraintMatrix() = default;
    // Shape, finiteness, index-range and zero-row checks; throws std::invalid_argument.
    void validate();

    int n_ = 0;
    int d_ = 0;
    int max_row_nnz_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

}  // namespace johnell
