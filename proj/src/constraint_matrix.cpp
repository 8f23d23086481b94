#include "johnell/constraint_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace johnell {

ConstraintMatrix ConstraintMatrix::from_dense(int n, int d, const std::vector<double>& row_major) {
    if (n < 1 || d < 1) throw std::invalid_argument("constraint matrix: n and d must be >= 1");
    if (row_major.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(d))
        throw std::invalid_argument("constraint matrix: dense buffer size != n*d");
    ConstraintMatrix m;
    m.n_ = n;
    m.d_ = d;
    m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double v = row_major[static_cast<std::size_t>(i) * d + j];
            if (v != 0.0) {
                m.col_idx_.push_back(j);
                m.values_.push_back(v);
            }
        }
        m.row_ptr_[static_cast<std::size_t>(i) + 1] = static_cast<int>(m.col_idx_.size());
    }
    m.validate();
    return m;
}

ConstraintMatrix ConstraintMatrix::from_dense(const Eigen::MatrixXd& a) {
    std::vector<double> buf(static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(a.cols()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            buf[static_cast<std::size_t>(i) * a.cols() + j] = a(i, j);
    return from_dense(static_cast<int>(a.rows()), static_cast<int>(a.cols()), buf);
}

ConstraintMatrix ConstraintMatrix::from_triplets(int n, int d, std::vector<Triplet> entries) {
    if (n < 1 || d < 1) throw std::invalid_argument("constraint matrix: n and d must be >= 1");
    for (const auto& t : entries) {
        if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= d)
            throw std::invalid_argument("constraint matrix: triplet index out of range (row " +
                                        std::to_string(t.row) + ", col " + std::to_string(t.col) + ")");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& x, const Triplet& y) {
        return x.row != y.row ? x.row < y.row : x.col < y.col;
    });
    ConstraintMatrix m;
    m.n_ = n;
    m.d_ = d;
    m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    std::size_t i = 0;
    for (int r = 0; r < n; ++r) {
        while (i < entries.size() && entries[i].row == r) {
            int c = entries[i].col;
            double v = 0.0;
            while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
                v += entries[i].value;  // duplicates summed
                ++i;
            }
            if (v != 0.0) {
                m.col_idx_.push_back(c);
                m.values_.push_back(v);
            }
        }
        m.row_ptr_[static_cast<std::size_t>(r) + 1] = static_cast<int>(m.col_idx_.size());
    }
    m.validate();
    return m;
}

void ConstraintMatrix::validate() {
    if (n_ < d_)
        throw std::invalid_argument("constraint matrix: need n >= d (got n = " + std::to_string(n_) +
                                    ", d = " + std::to_string(d_) + ")");
    int max_nnz = 0;
    for (int r = 0; r < n_; ++r) {
        double amax = 0.0;
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            if (!std::isfinite(values_[static_cast<std::size_t>(k)]))
                throw std::invalid_argument("constraint matrix: non-finite entry in row " + std::to_string(r));
            amax = std::max(amax, std::fabs(values_[static_cast<std::size_t>(k)]));
        }
        if (amax == 0.0)
            throw std::invalid_argument("constraint matrix: zero row " + std::to_string(r));
        max_nnz = std::max(max_nnz, row_ptr_[r + 1] - row_ptr_[r]);
    }
    max_row_nnz_ = max_nnz;
}

Eigen::MatrixXd ConstraintMatrix::to_dense() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, d_);
    for (int r = 0; r < n_; ++r)
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            a(r, col_idx_[static_cast<std::size_t>(k)]) = values_[static_cast<std::size_t>(k)];
    return a;
}

double ConstraintMatrix::row_dot(int i, const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        acc += values_[static_cast<std::size_t>(k)] * x[col_idx_[static_cast<std::size_t>(k)]];
    return acc;
}

}  // namespace johnell
