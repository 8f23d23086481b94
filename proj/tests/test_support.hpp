// Shared fixtures: canonical small instances and a deterministic dense
// random-instance builder that does not go through the io generators.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "johnell/constraint_matrix.hpp"
#include "johnell/rng.hpp"

namespace testutil {

// Rows (1,0), (0,1), (1,1). Gram at unit weights is [[2,1],[1,2]] and the
// optimal weights are (2/3, 2/3, 2/3).
inline johnell::ConstraintMatrix three_row() {
    return johnell::ConstraintMatrix::from_dense(3, 2, {1, 0, 0, 1, 1, 1});
}

inline johnell::ConstraintMatrix identity(int d) {
    return johnell::ConstraintMatrix::from_dense(Eigen::MatrixXd::Identity(d, d));
}

// Dense Gaussian rows; full column rank with probability 1.
inline johnell::ConstraintMatrix random_dense(int n, int d, std::uint64_t seed) {
    johnell::RandomStream rs(seed);
    Eigen::MatrixXd a(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = rs.gaussian();
    return johnell::ConstraintMatrix::from_dense(a);
}

// Entries in [0.1, 1.1], bounded away from zero so Grams stay well conditioned.
inline Eigen::VectorXd random_weights(int n, std::uint64_t seed) {
    johnell::RandomStream rs(seed);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.1 + rs.uniform01();
    return w;
}

// Rows covering windows of bandwidth+1 consecutive columns, every column hit.
inline johnell::ConstraintMatrix banded(int n, int d, int bandwidth, std::uint64_t seed) {
    johnell::RandomStream rs(seed);
    const int window = std::min(bandwidth + 1, d);
    std::vector<johnell::Triplet> t;
    for (int i = 0; i < n; ++i) {
        const int start = i % (d - window + 1);
        for (int j = 0; j < window; ++j) {
            double v = rs.gaussian();
            if (v == 0.0) v = 1.0;
            t.push_back({i, start + j, v});
        }
    }
    return johnell::ConstraintMatrix::from_triplets(n, d, std::move(t));
}

}  // namespace testutil
