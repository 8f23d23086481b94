// Randomized solver: the averaged fixed point with sketched quadratic forms
// and, when it reduces rows, a sampled Gram in place of the exact one.
#pragma once

#include "johnell/core.hpp"

namespace johnell {

// Per iteration: estimate leverage scores of sqrt(W_k) A, sample rows when the
// prescribed count N is below n (exact weighted Gram otherwise), factor, and
// replace each w_{k+1,i} by a sketched estimate of w_{k,i} * sigma_i(w_k).
// Averages the iterates and normalizes. Certificate bound is (1+eps)^2.
EllipsoidCertificate fast_general_solve(const ConstraintMatrix& a, const SolverConfig& config,
                                        IterationTrace* trace = nullptr);

struct PhaseCosts {
    long iterations = 0;
    double total_ms = 0.0;
    double gram_ms = 0.0;    // exact weighted Gram accumulation
    double factor_ms = 0.0;  // Cholesky
    double scores_ms = 0.0;  // leverage-score estimation
    double sample_ms = 0.0;  // plan construction + sampled Gram
    double sketch_ms = 0.0;  // sketch generation + row form estimates
    double step_ms = 0.0;    // full iteration wall time
    double per_iteration_ms() const { return iterations ? total_ms / double(iterations) : 0.0; }
};

// Runs the solver and aggregates per-phase wall times from the trace.
PhaseCosts per_iteration_cost_audit(const ConstraintMatrix& a, const SolverConfig& config);

}  // namespace johnell
