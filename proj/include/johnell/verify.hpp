// Verification layer. Everything here recomputes with its own naive dense
// routines (hand-rolled Cholesky, substitution, Jacobi eigensolver) and
// shares no linear-solve code with the solver modules.
#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "johnell/constraint_matrix.hpp"
#include "johnell/core.hpp"

namespace johnell {

struct BruteForceResult {
    Eigen::VectorXd weights;
    double objective = 0.0;
    OptimalityResidual residual;
    long steps = 0;
    bool converged = false;
};

// Projected gradient descent with backtracking on
// f(w) = sum w_i - log det(sum w_i a_i a_i^T) - d over w >= 0.
// Terminates when comp_slack, sigma_violation and |sum w - d| are all <= tol.
// Desk scale only (n <= 500, d <= 20); throws solver_error at the step cap.
BruteForceResult brute_force_solve(const ConstraintMatrix& a, double tol = 1e-6,
                                   long max_steps = 1000000);

struct ContainmentReport {
    bool inner_pass = false;
    bool outer_pass = false;
    bool outer_exact = false;  // true when vertices were enumerated (d == 2)
    long samples = 0;
    int worst_row = -1;          // inner witness: violated constraint row
    Eigen::VectorXd witness;     // offending point
    double worst_value = 0.0;    // |a_i . x| (inner) or x^T M x (outer)
};

// Inner: samples points on the boundary of the certified inscribed ellipsoid
// (shrunk by the variant's certified bound) and asserts |a_i . x| <= 1 + 1e-9.
// Outer: for d == 2 enumerates polytope vertices exactly and asserts
// x^T M x <= d + 1e-9; for d >= 3 runs a hit-and-run walk inside the polytope
// as a sampled necessary condition (outer_exact = false).
ContainmentReport containment_test(const ConstraintMatrix& a, const EllipsoidCertificate& cert,
                                   long num_samples, std::uint64_t seed);

struct SpectralReport {
    bool pass = false;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    Eigen::VectorXd witness;  // eigenvector of the extreme generalized eigenvalue
};

// Generalized eigenvalues of (H~, H) via L^{-1} H~ L^{-T}; pass iff all lie
// in [1 - eps0, 1 + eps0] (tiny numerical slack).
SpectralReport spectral_approx_check(const Eigen::MatrixXd& h, const Eigen::MatrixXd& h_tilde,
                                     double eps0);

// Midpoint convexity defect of phi_row(v) = log sigma_row(v):
// phi((v1+v2)/2) - (phi(v1) + phi(v2))/2. Nonpositive up to roundoff.
double convexity_probe(const ConstraintMatrix& a, const Eigen::VectorXd& v1,
                       const Eigen::VectorXd& v2, int row);

namespace oracle {
// Naive dense kit used by this module and by tests as an independent oracle.
// In-place lower Cholesky; returns the first nonpositive pivot column or -1.
int naive_cholesky(Eigen::MatrixXd& g);
void naive_solve_lower(const Eigen::MatrixXd& l, Eigen::VectorXd& x);
void naive_solve_lower_transpose(const Eigen::MatrixXd& l, Eigen::VectorXd& x);
// Dense symmetric inverse via the naive factorization.
Eigen::MatrixXd naive_sym_inverse(const Eigen::MatrixXd& g);
// Cyclic Jacobi; returns eigenvalues ascending, eigenvectors as columns.
void jacobi_eigen(const Eigen::MatrixXd& sym, Eigen::VectorXd& eigenvalues,
                  Eigen::MatrixXd& eigenvectors);
// All sigma_i(w) through the naive inverse (no shared code with core::sigma).
Eigen::VectorXd naive_sigma(const ConstraintMatrix& a, const Eigen::VectorXd& w);
double naive_objective(const ConstraintMatrix& a, const Eigen::VectorXd& w);
Eigen::MatrixXd naive_gram(const ConstraintMatrix& a, const Eigen::VectorXd& w);
}  // namespace oracle

}  // namespace johnell
