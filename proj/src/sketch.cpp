#include "johnell/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "johnell/core.hpp"
#include "johnell/parallel.hpp"
#include "johnell/rng.hpp"

namespace johnell {

GaussianSketch make_gaussian_sketch(int s, int d, std::uint64_t seed) {
    if (s < 1 || d < 1) throw std::invalid_argument("make_gaussian_sketch: s and d must be >= 1");
    GaussianSketch sk;
    sk.rows = s;
    sk.cols = d;
    sk.seed = seed;
    sk.m.resize(s, d);
    RandomStream rng(seed);
    // Row-major fill order is part of the determinism contract.
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < d; ++j) sk.m(i, j) = rng.gaussian();
    return sk;
}

Eigen::VectorXd sketched_quadratic_forms(const GaussianSketch& s, const Eigen::MatrixXd& chol_lower,
                                         const ConstraintMatrix& a,
                                         const Eigen::VectorXd* scale_squared) {
    const int n = a.rows();
    const int d = a.cols();
    if (s.cols != d || chol_lower.rows() != d || chol_lower.cols() != d)
        throw std::invalid_argument("sketched_quadratic_forms: dimension mismatch");
    if (scale_squared && scale_squared->size() != n)
        throw std::invalid_argument("sketched_quadratic_forms: scale length mismatch");
    for (int j = 0; j < d; ++j)
        if (chol_lower(j, j) == 0.0 || !std::isfinite(chol_lower(j, j)))
            throw factorization_error("sketched_quadratic_forms: factor is not invertible (pivot column " +
                                          std::to_string(j) + ")",
                                      j);
    // Q = S L^{-T}: s triangular solves, done once.
    Eigen::MatrixXd qt = s.m.transpose();  // d x s
    chol_lower.transpose().triangularView<Eigen::Upper>().solveInPlace(qt);
    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    const auto& val = a.values();
    Eigen::VectorXd out(n);
    const double inv_s = 1.0 / static_cast<double>(s.rows);
    parallel_for_range(n, [&](long lo, long hi) {
        Eigen::VectorXd acc(s.rows);
        for (long i = lo; i < hi; ++i) {
            acc.setZero();
            for (int k = ptr[i]; k < ptr[i + 1]; ++k)
                acc += val[static_cast<std::size_t>(k)] * qt.row(col[static_cast<std::size_t>(k)]).transpose();
            double q = acc.squaredNorm() * inv_s;
            if (scale_squared) q *= (*scale_squared)[i];
            out[i] = q;
        }
    });
    return out;
}

LeverageEstimate approx_leverage_scores(const ConstraintMatrix& a, const Eigen::VectorXd* weights,
                                        double eps_sigma, double delta_sigma, double embed_constant,
                                        double jl_constant, std::uint64_t seed) {
    const int n = a.rows();
    const int d = a.cols();
    if (eps_sigma <= 0.0 || eps_sigma >= 1.0)
        throw std::invalid_argument("approx_leverage_scores: eps_sigma must be in (0, 1)");
    if (delta_sigma <= 0.0 || delta_sigma >= 1.0)
        throw std::invalid_argument("approx_leverage_scores: delta_sigma must be in (0, 1)");
    if (weights && weights->size() != n)
        throw std::invalid_argument("approx_leverage_scores: weight length mismatch");

    const int m = std::max(d + 1, static_cast<int>(std::ceil(
                                      embed_constant * d * std::log(static_cast<double>(d) / delta_sigma))));
    const int k = std::max(1, static_cast<int>(std::ceil(
                                  jl_constant * std::log(static_cast<double>(n) / delta_sigma))));

    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    const auto& val = a.values();

    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::uint64_t attempt_seed = child_seed(seed, static_cast<std::uint64_t>(attempt), rng_role::leverage);
        RandomStream rng(attempt_seed);
        // One target row and one sign per input row; O(nnz) to apply.
        Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(m, d);
        for (int i = 0; i < n; ++i) {
            const int target = static_cast<int>(rng.bounded(static_cast<std::uint32_t>(m)));
            const double sign = rng.coin() ? 1.0 : -1.0;
            const double scale = weights ? sign * std::sqrt(std::max(0.0, (*weights)[i])) : sign;
            if (scale == 0.0) continue;
            for (int p = ptr[i]; p < ptr[i + 1]; ++p)
                sb(target, col[static_cast<std::size_t>(p)]) += scale * val[static_cast<std::size_t>(p)];
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(sb);
        Eigen::MatrixXd r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
        double dmax = 0.0;
        for (int j = 0; j < d; ++j) dmax = std::max(dmax, std::fabs(r(j, j)));
        bool deficient = !(dmax > 0.0);
        for (int j = 0; j < d && !deficient; ++j)
            if (std::fabs(r(j, j)) <= 1e-12 * dmax) deficient = true;
        if (deficient) {
            if (attempt == 0) continue;  // retry once with a fresh child stream
            throw factorization_error(
                "approx_leverage_scores: rank-deficient embedded matrix after retry", -1);
        }

        // Estimates are ||(G R^{-T}) b_i||^2 / k; R Y = G^T gives Y^T = G R^{-T}.
        Eigen::MatrixXd g(k, d);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < d; ++j) g(i, j) = rng.gaussian();
        Eigen::MatrixXd gt = g.transpose();  // d x k
        r.triangularView<Eigen::Upper>().solveInPlace(gt);
        Eigen::VectorXd st(n);
        const double inv_k = 1.0 / static_cast<double>(k);
        parallel_for_range(n, [&](long lo, long hi) {
            Eigen::VectorXd acc(k);
            for (long i = lo; i < hi; ++i) {
                acc.setZero();
                for (int p = ptr[i]; p < ptr[i + 1]; ++p)
                    acc += val[static_cast<std::size_t>(p)] * gt.row(col[static_cast<std::size_t>(p)]).transpose();
                double q = acc.squaredNorm() * inv_k;
                if (weights) q *= std::max(0.0, (*weights)[i]);
                st[i] = q;
            }
        });
        LeverageEstimate est;
        est.sigma_tilde = st;
        est.epsilon_sigma = eps_sigma;
        est.delta_sigma = delta_sigma;
        est.embed_rows = m;
        est.jl_rows = k;
        est.seed = seed;
        return est;
    }
    throw std::logic_error("approx_leverage_scores: unreachable");
}

SamplingPlan build_sampling_plan(const Eigen::VectorXd& sigma_tilde, int d, double eps0,
                                 double delta0, double beta, double sample_constant,
                                 std::uint64_t seed) {
    const Eigen::Index n = sigma_tilde.size();
    if (n < 1) throw std::invalid_argument("build_sampling_plan: empty score vector");
    if (eps0 <= 0.0 || eps0 >= 1.0) throw std::invalid_argument("build_sampling_plan: eps0 must be in (0, 1)");
    if (delta0 <= 0.0 || delta0 >= 1.0)
        throw std::invalid_argument("build_sampling_plan: delta0 must be in (0, 1)");
    if (beta <= 0.0) throw std::invalid_argument("build_sampling_plan: beta must be positive");
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(sigma_tilde[i]) || sigma_tilde[i] < 0.0)
            throw std::invalid_argument("build_sampling_plan: score " + std::to_string(i) +
                                        " is negative or non-finite");
        total += sigma_tilde[i];
    }
    if (total <= 0.0) throw std::invalid_argument("build_sampling_plan: all scores are zero");

    SamplingPlan plan;
    plan.epsilon0 = eps0;
    plan.delta0 = delta0;
    plan.beta = beta;
    plan.seed = seed;
    plan.probabilities = sigma_tilde / total;

    const double raw = std::ceil(sample_constant * d * std::log(static_cast<double>(d) / delta0) / (eps0 * eps0));
    const long count = std::max(1L, static_cast<long>(raw));

    // Inverse-CDF sampling over the prefix sums keeps the draw deterministic.
    Eigen::VectorXd cdf(n);
    double run = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        run += plan.probabilities[i];
        cdf[i] = run;
    }
    cdf[n - 1] = 1.0;

    RandomStream rng(seed);
    plan.indices.resize(static_cast<std::size_t>(count));
    plan.scales.resize(count);
    const double inv_count = 1.0 / static_cast<double>(count);
    for (long j = 0; j < count; ++j) {
        const double u = rng.uniform();
        const double* pos = std::lower_bound(cdf.data(), cdf.data() + n, u);
        Eigen::Index idx = std::min<Eigen::Index>(pos - cdf.data(), n - 1);
        plan.indices[static_cast<std::size_t>(j)] = static_cast<int>(idx);
        plan.scales[j] = inv_count / plan.probabilities[idx];
    }
    return plan;
}

Eigen::MatrixXd sampled_gram(const ConstraintMatrix& a, const Eigen::VectorXd* weights,
                             const SamplingPlan& plan) {
    const int n = a.rows();
    const int d = a.cols();
    if (weights && weights->size() != n)
        throw std::invalid_argument("sampled_gram: weight length mismatch");
    // Aggregate repeat draws first; the accumulation is then one pass over rows.
    std::vector<double> coeff(static_cast<std::size_t>(n), 0.0);
    for (std::size_t j = 0; j < plan.indices.size(); ++j) {
        const int i = plan.indices[j];
        if (i < 0 || i >= n) throw std::invalid_argument("sampled_gram: plan index out of range");
        coeff[static_cast<std::size_t>(i)] += plan.scales[static_cast<Eigen::Index>(j)];
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    const auto& val = a.values();
    for (int i = 0; i < n; ++i) {
        double c = coeff[static_cast<std::size_t>(i)];
        if (c == 0.0) continue;
        if (weights) c *= (*weights)[i];
        if (c == 0.0) continue;
        for (int k1 = ptr[i]; k1 < ptr[i + 1]; ++k1) {
            const double v1 = c * val[static_cast<std::size_t>(k1)];
            const int c1 = col[static_cast<std::size_t>(k1)];
            for (int k2 = ptr[i]; k2 <= k1; ++k2)
                h(c1, col[static_cast<std::size_t>(k2)]) += v1 * val[static_cast<std::size_t>(k2)];
        }
    }
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
    return h;
}

}  // namespace johnell
