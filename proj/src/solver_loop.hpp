// Internal: the averaged multiplicative fixed point shared by the dense,
// sketched, and sparse solvers. Starts at w_1 = d/n, performs T-1 steps, and
// averages all T iterates. When a step moves by <= convergence_tol the
// remaining iterates equal the current one to that precision, so the loop
// adds the converged tail to the running sum instead of spinning; the result
// is the full T-iterate average up to ~convergence_tol.
#pragma once

#include <chrono>

#include "johnell/core.hpp"

namespace johnell::detail {

struct LoopResult {
    Eigen::VectorXd averaged;
    bool early_stop = false;
    long steps = 0;           // fixed-point evaluations performed
    long averaged_count = 0;  // iterates the average represents (T)
};

inline double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

template <class StepFn>  // Eigen::VectorXd step(const Eigen::VectorXd& w, long k, IterationRecord&)
LoopResult averaged_fixed_point(int n, int d, long t_budget, double convergence_tol,
                                IterationTrace* trace, StepFn&& step) {
    LoopResult out;
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, static_cast<double>(d) / static_cast<double>(n));
    Eigen::VectorXd accum = w;
    long produced = 1;
    for (long k = 1; k < t_budget; ++k) {
        IterationRecord rec;
        rec.k = k;
        const auto t0 = std::chrono::steady_clock::now();
        Eigen::VectorXd next = step(w, k, rec);
        rec.step_ms = ms_since(t0);
        rec.step_delta = (next - w).cwiseAbs().maxCoeff();
        rec.weight_sum = next.sum();
        rec.min_weight = next.minCoeff();
        rec.max_weight = next.maxCoeff();
        w.swap(next);
        accum += w;
        ++produced;
        if (trace) trace->iterations.push_back(rec);
        if (convergence_tol > 0.0 && rec.step_delta <= convergence_tol) {
            out.early_stop = true;
            break;
        }
    }
    if (produced < t_budget) accum += w * static_cast<double>(t_budget - produced);
    out.averaged = accum / static_cast<double>(t_budget);
    out.steps = produced - 1;
    out.averaged_count = t_budget;
    if (trace) {
        trace->early_stop = out.early_stop;
        trace->steps_computed = out.steps;
        trace->averaged_count = out.averaged_count;
        trace->averaged = out.averaged;
    }
    return out;
}

}  // namespace johnell::detail
