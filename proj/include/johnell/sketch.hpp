// Randomized primitives: Gaussian sketches of quadratic forms, count-style
// leverage-score estimation, and row sampling plans with their sampled Gram.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "johnell/constraint_matrix.hpp"

namespace johnell {

struct GaussianSketch {
    int rows = 0;  // s
    int cols = 0;  // d
    std::uint64_t seed = 0;
    Eigen::MatrixXd m;  // s x d, iid standard normal
};

GaussianSketch make_gaussian_sketch(int s, int d, std::uint64_t seed);

// q_i = (1/s) * ||S L^{-T} b_i||^2 where b_i = scale_i * a_i. The s x d
// matrix S L^{-T} is formed once with s triangular solves; each row then
// costs O(s * nnz(a_i)). E[q_i] = scale_i^2 * a_i^T (L L^T)^{-1} a_i.
// scale_squared == nullptr means b_i = a_i; otherwise scale_i = sqrt(scale_squared_i).
Eigen::VectorXd sketched_quadratic_forms(const GaussianSketch& s, const Eigen::MatrixXd& chol_lower,
                                         const ConstraintMatrix& a,
                                         const Eigen::VectorXd* scale_squared);

struct LeverageEstimate {
    Eigen::VectorXd sigma_tilde;  // length n, nonnegative
    double epsilon_sigma = 0.0;
    double delta_sigma = 0.0;
    int embed_rows = 0;  // m
    int jl_rows = 0;     // k
    std::uint64_t seed = 0;
};

// Leverage scores of the rows b_i = sqrt(weight_i) * a_i estimated by a
// count-style embedding (one sign, one target row per input row), a QR of the
// embedded matrix, and a k-row Gaussian norm estimator. Retries once on a
// rank-deficient embedding, then fails.
LeverageEstimate approx_leverage_scores(const ConstraintMatrix& a, const Eigen::VectorXd* weights,
                                        double eps_sigma, double delta_sigma, double embed_constant,
                                        double jl_constant, std::uint64_t seed);

struct SamplingPlan {
    std::vector<int> indices;      // N sampled row ids, iid from probabilities
    Eigen::VectorXd scales;        // 1 / (N * p_{indices[j]})
    Eigen::VectorXd probabilities; // length n, sums to 1
    double epsilon0 = 0.0;
    double delta0 = 0.0;
    double beta = 1.0;  // score-quality factor, carried for bookkeeping
    std::uint64_t seed = 0;
};

// N = ceil(c_N * eps0^-2 * d * log(d/delta0)) rows drawn iid from
// p = sigma_tilde / sum(sigma_tilde). N may exceed n; sampling is with
// replacement.
SamplingPlan build_sampling_plan(const Eigen::VectorXd& sigma_tilde, int d, double eps0,
                                 double delta0, double beta, double sample_constant,
                                 std::uint64_t seed);

// H~ = sum_j scales[j] * b_{i(j)} b_{i(j)}^T with b_i = sqrt(weight_i) * a_i.
// Unbiased for the weighted Gram; duplicates are aggregated before the
// rank-one accumulation.
Eigen::MatrixXd sampled_gram(const ConstraintMatrix& a, const Eigen::VectorXd* weights,
                             const SamplingPlan& plan);

}  // namespace johnell
