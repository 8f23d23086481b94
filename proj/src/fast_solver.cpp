#include "johnell/fast_solver.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "johnell/rng.hpp"
#include "johnell/sketch.hpp"
#include "solver_loop.hpp"

namespace johnell {

namespace {

long prescribed_sample_count(int d, double eps0, double delta0, double sample_constant) {
    const double raw =
        std::ceil(sample_constant * d * std::log(static_cast<double>(d) / delta0) / (eps0 * eps0));
    return std::max(1L, static_cast<long>(raw));
}

}  // namespace

EllipsoidCertificate fast_general_solve(const ConstraintMatrix& a, const SolverConfig& config,
                                        IterationTrace* trace) {
    const int n = a.rows();
    const int d = a.cols();
    config.validate(n, d);
    const long t_budget = config.iteration_budget(n, d);
    const double eps0 = config.resolved_epsilon0();
    const double delta0 = config.delta / (2.0 * static_cast<double>(t_budget));
    const double delta_sigma = delta0;
    const double beta = 1.0 + config.sigma_eps;
    const long sample_count = prescribed_sample_count(d, eps0, delta0, config.sample_constant);
    const bool sampling_active = config.use_sampling && sample_count < n;
    const int sketch_rows =
        std::max(1, static_cast<int>(std::ceil(config.s_constant / config.epsilon)));

    auto step = [&](const Eigen::VectorXd& w, long k, IterationRecord& rec) {
        using clock = std::chrono::steady_clock;
        Eigen::MatrixXd h;
        bool have_factor = false;
        Eigen::MatrixXd chol;
        if (sampling_active) {
            auto t0 = clock::now();
            LeverageEstimate est = approx_leverage_scores(
                a, &w, config.sigma_eps, delta_sigma, config.embed_constant, config.jl_constant,
                child_seed(config.seed, static_cast<std::uint64_t>(k), rng_role::leverage));
            rec.scores_ms = detail::ms_since(t0);
            t0 = clock::now();
            SamplingPlan plan = build_sampling_plan(
                est.sigma_tilde, d, eps0, delta0, beta, config.sample_constant,
                child_seed(config.seed, static_cast<std::uint64_t>(k), rng_role::plan));
            h = sampled_gram(a, &w, plan);
            rec.sample_ms = detail::ms_since(t0);
            t0 = clock::now();
            try {
                chol = detail::cholesky_or_throw(h, "fast_general_solve: sampled Gram");
                have_factor = true;
            } catch (const factorization_error&) {
                // One fresh plan; a second failure falls through to the exact Gram.
                SamplingPlan retry = build_sampling_plan(
                    est.sigma_tilde, d, eps0, delta0, beta, config.sample_constant,
                    child_seed(config.seed, static_cast<std::uint64_t>(k), rng_role::gram_retry));
                h = sampled_gram(a, &w, retry);
                try {
                    chol = detail::cholesky_or_throw(h, "fast_general_solve: resampled Gram");
                    have_factor = true;
                } catch (const factorization_error&) {
                }
            }
            rec.factor_ms = detail::ms_since(t0);
        }
        if (!have_factor) {
            auto t0 = clock::now();
            h = gram(a, w);
            rec.gram_ms = detail::ms_since(t0);
            t0 = clock::now();
            chol = detail::cholesky_or_throw(h, "fast_general_solve: weighted Gram");
            rec.factor_ms += detail::ms_since(t0);
        }
        Eigen::VectorXd next;
        if (config.use_sketch) {
            auto t0 = clock::now();
            GaussianSketch s = make_gaussian_sketch(
                sketch_rows, d,
                child_seed(config.seed, static_cast<std::uint64_t>(k), rng_role::sketch));
            next = sketched_quadratic_forms(s, chol, a, &w);
            rec.sketch_ms = detail::ms_since(t0);
        } else {
            next = detail::row_forms_dense(chol, a, &w);
        }
        for (Eigen::Index i = 0; i < next.size(); ++i)
            if (next[i] < 0.0) {
                next[i] = 0.0;
                ++rec.clamped;
            }
        return next;
    };

    detail::LoopResult loop =
        detail::averaged_fixed_point(n, d, t_budget, config.convergence_tol, trace, step);
    Eigen::VectorXd v = normalize_weights(loop.averaged, d);
    if (trace) trace->normalized = v;

    Eigen::VectorXd sig = sigma(a, v);  // exact, for the certificate
    EllipsoidCertificate cert;
    cert.weights = v;
    cert.gram = gram(a, v);
    cert.epsilon = config.epsilon;
    cert.sigma_max = sig.maxCoeff();
    cert.weight_sum = v.sum();
    cert.iterations = loop.steps;
    cert.variant = "sketch";
    cert.seed = config.seed;
    const double bound = (1.0 + config.epsilon) * (1.0 + config.epsilon);
    if (cert.sigma_max > bound + 1e-9)
        throw solver_error("fast_general_solve: sigma bound " + std::to_string(bound) +
                               " not met (max " + std::to_string(cert.sigma_max) + ")",
                           v, cert.sigma_max);
    return cert;
}

PhaseCosts per_iteration_cost_audit(const ConstraintMatrix& a, const SolverConfig& config) {
    IterationTrace trace;
    const auto t0 = std::chrono::steady_clock::now();
    fast_general_solve(a, config, &trace);
    PhaseCosts costs;
    costs.total_ms = detail::ms_since(t0);
    costs.iterations = trace.steps_computed;
    for (const IterationRecord& rec : trace.iterations) {
        costs.gram_ms += rec.gram_ms;
        costs.factor_ms += rec.factor_ms;
        costs.scores_ms += rec.scores_ms;
        costs.sample_ms += rec.sample_ms;
        costs.sketch_ms += rec.sketch_ms;
        costs.step_ms += rec.step_ms;
    }
    return costs;
}

}  // namespace johnell
