// Core model: weighted Gram matrix, leverage-type row forms sigma_i(w),
// the convex objective, the multiplicative fixed-point step, and the dense
// averaged solver with its certificate types.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "johnell/constraint_matrix.hpp"

namespace johnell {

struct SolverConfig {
    double epsilon = 0.5;   // target approximation quality, in (0, 1)
    double delta = 0.05;    // failure probability budget for randomized variants
    double t_constant = 10.0;  // c_T in T = max(1, ceil(c_T * log(n/d) / epsilon))
    double s_constant = 20.0;  // c_s in sketch rows s = ceil(c_s / epsilon)
    // Sampling precision; unset means epsilon / 20.
    std::optional<double> epsilon0;
    double sample_constant = 8.0;  // c_N in N = ceil(c_N * eps0^-2 * d * log(d/delta0))
    double embed_constant = 16.0;  // c_e in count-style embedding rows m
    double jl_constant = 50.0;     // c_k in Gaussian estimator rows k
    long max_iterations = 1000000;
    // Early stop when max_i |w_{k+1,i} - w_{k,i}| <= this; 0 disables.
    double convergence_tol = 1e-12;
    std::uint64_t seed = 0;
    // Audit switches: with both false the randomized solver reproduces the
    // exact iterates (identity sampling, exact quadratic forms).
    bool use_sketch = true;
    bool use_sampling = true;
    double sigma_eps = 0.5;  // accuracy requested from the leverage estimate

    void validate(int n, int d) const;
    long iteration_budget(int n, int d) const;  // T above, clamped by max_iterations
    double resolved_epsilon0() const { return epsilon0 ? *epsilon0 : epsilon / 20.0; }
};

struct EllipsoidCertificate {
    Eigen::VectorXd weights;  // v, length n
    Eigen::MatrixXd gram;     // sum_i v_i a_i a_i^T; advisory, checks recompute it
    double epsilon = 0.0;
    double sigma_max = 0.0;
    double weight_sum = 0.0;
    long iterations = 0;            // fixed-point steps actually evaluated
    std::string variant;            // "exact" | "sketch" | "treewidth"
    std::uint64_t seed = 0;
};

struct CertificateReport {
    bool pass = false;
    double sigma_max = 0.0;
    double weight_sum = 0.0;
    double bound = 0.0;      // sigma bound the certificate was held to
    int worst_row = -1;
    std::string reason;      // empty when pass
};

struct OptimalityResidual {
    double comp_slack = 0.0;       // max_i w_i |1 - sigma_i(w)|
    double sigma_violation = 0.0;  // max_i max(0, sigma_i(w) - 1)
    double weight_sum = 0.0;       // sum_i w_i (optimal value is d)
};

struct IterationRecord {
    long k = 0;
    double weight_sum = 0.0;
    double min_weight = 0.0;
    double max_weight = 0.0;
    double step_delta = 0.0;  // max_i |w_{k+1,i} - w_{k,i}|
    long clamped = 0;         // negative estimates clamped to zero this step
    // Phase wall times, milliseconds. Solvers fill what they measure.
    double gram_ms = 0.0;
    double factor_ms = 0.0;
    double scores_ms = 0.0;
    double sample_ms = 0.0;
    double sketch_ms = 0.0;
    double step_ms = 0.0;
};

struct IterationTrace {
    std::vector<IterationRecord> iterations;
    Eigen::VectorXd averaged;    // u
    Eigen::VectorXd normalized;  // v (equals u for the unnormalized variant)
    bool early_stop = false;
    long steps_computed = 0;   // fixed-point evaluations performed
    long averaged_count = 0;   // iterates the average represents (T)
};

// Factorization failure; pivot_column is the offending column of the Gram.
class factorization_error : public std::runtime_error {
public:
    factorization_error(const std::string& what, int pivot)
        : std::runtime_error(what), pivot_column(pivot) {}
    int pivot_column;
};

// Solver gave up before its certificate bound held; carries the best iterate.
class solver_error : public std::runtime_error {
public:
    solver_error(const std::string& what, Eigen::VectorXd best, double smax)
        : std::runtime_error(what), best_weights(std::move(best)), sigma_max(smax) {}
    Eigen::VectorXd best_weights;
    double sigma_max;
};

// sum_i w_i a_i a_i^T. Weights may contain zeros; result need not be PD.
Eigen::MatrixXd gram(const ConstraintMatrix& a, const Eigen::VectorXd& w);

// sigma_i(w) = a_i^T (A^T diag(w) A)^{-1} a_i for every row. One Cholesky
// factorization plus n triangular solves; no explicit inverse is formed.
Eigen::VectorXd sigma(const ConstraintMatrix& a, const Eigen::VectorXd& w);

// sum_i w_i - log det(gram(w)) - d.
double objective(const ConstraintMatrix& a, const Eigen::VectorXd& w);

// Gradient of the objective: 1 - sigma_i(w).
Eigen::VectorXd objective_gradient(const ConstraintMatrix& a, const Eigen::VectorXd& w);

// One multiplicative step w'_i = w_i * sigma_i(w).
Eigen::VectorXd fixed_point_step(const ConstraintMatrix& a, const Eigen::VectorXd& w);

// v_i = d * u_i / sum_j u_j.
Eigen::VectorXd normalize_weights(const Eigen::VectorXd& u, int d);

// Dense baseline: averaged multiplicative fixed point from w_1 = d/n,
// normalized. Deterministic; throws solver_error when the bound 1+eps cannot
// be certified within the iteration budget.
EllipsoidCertificate exact_solve(const ConstraintMatrix& a, const SolverConfig& config,
                                 IterationTrace* trace = nullptr);

// Recomputes sigma from scratch and checks the weight sum and the bound
// ((1+eps)^2 for the sketched variant, 1+eps for exact/treewidth).
CertificateReport certificate_check(const ConstraintMatrix& a, const EllipsoidCertificate& cert);

OptimalityResidual optimality_residual(const ConstraintMatrix& a, const Eigen::VectorXd& w);

namespace detail {
// q_i = scale_i^2 * ||L^{-1} a_i||^2 for all rows, blocked triangular solves.
// scale == nullptr means scale_i = 1. L is the lower Cholesky factor.
Eigen::VectorXd row_forms_dense(const Eigen::MatrixXd& chol_lower, const ConstraintMatrix& a,
                                const Eigen::VectorXd* scale_squared);

// Cholesky of a symmetric PD matrix; throws factorization_error naming the
// first nonpositive pivot column on failure.
Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& g, const char* what);
}  // namespace detail

}  // namespace johnell
