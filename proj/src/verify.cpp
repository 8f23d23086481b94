#include "johnell/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "johnell/rng.hpp"

namespace johnell {

namespace oracle {

int naive_cholesky(Eigen::MatrixXd& g) {
    const int d = static_cast<int>(g.rows());
    for (int j = 0; j < d; ++j) {
        double piv = g(j, j);
        for (int k = 0; k < j; ++k) piv -= g(j, k) * g(j, k);
        if (!(piv > 0.0) || !std::isfinite(piv)) return j;
        const double ljj = std::sqrt(piv);
        g(j, j) = ljj;
        for (int i = j + 1; i < d; ++i) {
            double s = g(i, j);
            for (int k = 0; k < j; ++k) s -= g(i, k) * g(j, k);
            g(i, j) = s / ljj;
        }
        for (int i = 0; i < j; ++i) g(i, j) = 0.0;
    }
    return -1;
}

void naive_solve_lower(const Eigen::MatrixXd& l, Eigen::VectorXd& x) {
    const int d = static_cast<int>(l.rows());
    for (int i = 0; i < d; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k) s -= l(i, k) * x[k];
        x[i] = s / l(i, i);
    }
}

void naive_solve_lower_transpose(const Eigen::MatrixXd& l, Eigen::VectorXd& x) {
    const int d = static_cast<int>(l.rows());
    for (int i = d - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < d; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
}

Eigen::MatrixXd naive_sym_inverse(const Eigen::MatrixXd& g) {
    const int d = static_cast<int>(g.rows());
    Eigen::MatrixXd l = g;
    const int bad = naive_cholesky(l);
    if (bad >= 0)
        throw factorization_error("naive_sym_inverse: matrix is not positive definite (pivot column " +
                                      std::to_string(bad) + ")",
                                  bad);
    Eigen::MatrixXd inv(d, d);
    Eigen::VectorXd col(d);
    for (int j = 0; j < d; ++j) {
        col.setZero();
        col[j] = 1.0;
        naive_solve_lower(l, col);
        naive_solve_lower_transpose(l, col);
        inv.col(j) = col;
    }
    // Symmetrize to kill substitution roundoff.
    return 0.5 * (inv + inv.transpose());
}

void jacobi_eigen(const Eigen::MatrixXd& sym, Eigen::VectorXd& eigenvalues,
                  Eigen::MatrixXd& eigenvectors) {
    const int d = static_cast<int>(sym.rows());
    Eigen::MatrixXd a = 0.5 * (sym + sym.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d);
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-15 * scale * d) break;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) <= 1e-18 * scale) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return a(x, x) < a(y, y); });
    eigenvalues.resize(d);
    eigenvectors.resize(d, d);
    for (int i = 0; i < d; ++i) {
        eigenvalues[i] = a(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i)]);
        eigenvectors.col(i) = v.col(idx[static_cast<std::size_t>(i)]);
    }
}

Eigen::MatrixXd naive_gram(const ConstraintMatrix& a, const Eigen::VectorXd& w) {
    const int n = a.rows();
    const int d = a.cols();
    if (w.size() != n) throw std::invalid_argument("naive_gram: weight length mismatch");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    const auto& val = a.values();
    for (int r = 0; r < n; ++r)
        for (int p = ptr[r]; p < ptr[r + 1]; ++p)
            for (int q = ptr[r]; q < ptr[r + 1]; ++q)
                g(col[static_cast<std::size_t>(p)], col[static_cast<std::size_t>(q)]) +=
                    w[r] * val[static_cast<std::size_t>(p)] * val[static_cast<std::size_t>(q)];
    return g;
}

Eigen::VectorXd naive_sigma(const ConstraintMatrix& a, const Eigen::VectorXd& w) {
    const int n = a.rows();
    const Eigen::MatrixXd inv = naive_sym_inverse(naive_gram(a, w));
    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    const auto& val = a.values();
    Eigen::VectorXd out(n);
    for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int p = ptr[r]; p < ptr[r + 1]; ++p)
            for (int q = ptr[r]; q < ptr[r + 1]; ++q)
                acc += val[static_cast<std::size_t>(p)] * val[static_cast<std::size_t>(q)] *
                       inv(col[static_cast<std::size_t>(p)], col[static_cast<std::size_t>(q)]);
        out[r] = acc;
    }
    return out;
}

double naive_objective(const ConstraintMatrix& a, const Eigen::VectorXd& w) {
    Eigen::MatrixXd l = naive_gram(a, w);
    const int bad = naive_cholesky(l);
    if (bad >= 0)
        throw factorization_error("naive_objective: Gram is not positive definite (pivot column " +
                                      std::to_string(bad) + ")",
                                  bad);
    double logdet = 0.0;
    for (int j = 0; j < l.rows(); ++j) logdet += 2.0 * std::log(l(j, j));
    return w.sum() - logdet - static_cast<double>(a.cols());
}

}  // namespace oracle

namespace {

// Objective value or +inf when the Gram degenerates.
double pgd_value(const ConstraintMatrix& a, const Eigen::VectorXd& w) {
    try {
        return oracle::naive_objective(a, w);
    } catch (const factorization_error&) {
        return std::numeric_limits<double>::infinity();
    }
}

OptimalityResidual pgd_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& sig) {
    OptimalityResidual res;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        res.comp_slack = std::max(res.comp_slack, w[i] * std::fabs(1.0 - sig[i]));
        res.sigma_violation = std::max(res.sigma_violation, sig[i] - 1.0);
    }
    res.sigma_violation = std::max(res.sigma_violation, 0.0);
    res.weight_sum = w.sum();
    return res;
}

}  // namespace

BruteForceResult brute_force_solve(const ConstraintMatrix& a, double tol, long max_steps) {
    const int n = a.rows();
    const int d = a.cols();
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, static_cast<double>(d) / static_cast<double>(n));
    double fw = pgd_value(a, w);
    if (!std::isfinite(fw))
        throw factorization_error("brute_force_solve: initial Gram is not positive definite", -1);
    double eta = 1.0;
    Eigen::VectorXd sig = oracle::naive_sigma(a, w);
    BruteForceResult best;
    best.weights = w;
    best.objective = fw;

    for (long step = 0; step < max_steps; ++step) {
        OptimalityResidual res = pgd_residual(w, sig);
        if (res.comp_slack <= tol && res.sigma_violation <= tol &&
            std::fabs(res.weight_sum - static_cast<double>(d)) <= tol) {
            BruteForceResult out;
            out.weights = w;
            out.objective = fw;
            out.residual = res;
            out.steps = step;
            out.converged = true;
            return out;
        }
        const Eigen::VectorXd grad = Eigen::VectorXd::Ones(n) - sig;
        eta = std::min(eta * 2.0, 1e6);
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            Eigen::VectorXd cand = (w - eta * grad).cwiseMax(0.0);
            const double fc = pgd_value(a, cand);
            const double decrease = grad.dot(cand - w);
            if (std::isfinite(fc) && fc <= fw + 1e-4 * decrease) {
                w = std::move(cand);
                fw = fc;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        if (!moved) break;  // step collapsed to roundoff; report the best point
        sig = oracle::naive_sigma(a, w);
        if (fw < best.objective) {
            best.weights = w;
            best.objective = fw;
        }
    }
    const OptimalityResidual res = pgd_residual(w, sig);
    double smax = 0.0;
    for (Eigen::Index i = 0; i < sig.size(); ++i) smax = std::max(smax, sig[i]);
    throw solver_error("brute_force_solve: residual " + std::to_string(res.comp_slack) + "/" +
                           std::to_string(res.sigma_violation) + " above tolerance " +
                           std::to_string(tol) + " at the step cap",
                       w, smax);
}

ContainmentReport containment_test(const ConstraintMatrix& a, const EllipsoidCertificate& cert,
                                   long num_samples, std::uint64_t seed) {
    const int n = a.rows();
    const int d = a.cols();
    if (cert.weights.size() != n)
        throw std::invalid_argument("containment_test: certificate weight length mismatch");
    const double bound = cert.variant == "sketch"
                             ? (1.0 + cert.epsilon) * (1.0 + cert.epsilon)
                             : 1.0 + cert.epsilon;
    const Eigen::MatrixXd m = oracle::naive_gram(a, cert.weights);
    Eigen::VectorXd lambda;
    Eigen::MatrixXd vecs;
    oracle::jacobi_eigen(m, lambda, vecs);
    if (!(lambda[0] > 0.0))
        throw factorization_error("containment_test: certificate Gram is not positive definite", -1);
    Eigen::MatrixXd isqrt = vecs;
    for (int j = 0; j < d; ++j) isqrt.col(j) *= 1.0 / std::sqrt(lambda[j]);
    isqrt = isqrt * vecs.transpose();  // m^{-1/2}

    RandomStream rng(child_seed(seed, 0, rng_role::containment));
    ContainmentReport report;
    report.inner_pass = true;
    report.outer_pass = true;

    // Inner: boundary points of {x : x^T m x <= 1/bound} must satisfy every row.
    const double shrink = 1.0 / std::sqrt(bound);
    Eigen::VectorXd u(d), x(d);
    double inner_worst = -1.0;
    Eigen::VectorXd inner_witness = Eigen::VectorXd::Zero(d);
    int inner_row = -1;
    for (long s = 0; s < num_samples; ++s) {
        for (int j = 0; j < d; ++j) u[j] = rng.gaussian();
        const double norm = u.norm();
        if (norm == 0.0) continue;
        x = isqrt * (u * (shrink / norm));
        for (int r = 0; r < n; ++r) {
            const double v = std::fabs(a.row_dot(r, x));
            if (v > inner_worst) {
                inner_worst = v;
                inner_witness = x;
                inner_row = r;
            }
        }
        ++report.samples;
    }
    if (inner_worst > 1.0 + 1e-9) report.inner_pass = false;

    double outer_worst = -1.0;
    Eigen::VectorXd outer_witness = Eigen::VectorXd::Zero(d);
    if (d == 2) {
        report.outer_exact = true;
        // Vertices: intersections of row pairs at levels +-1 that satisfy the rest.
        Eigen::VectorXd xi(2);
        auto dense_row = [&](int r) {
            Eigen::RowVector2d out = Eigen::RowVector2d::Zero();
            const auto cols = a.row_cols(r);
            const auto vals = a.row_vals(r);
            for (std::size_t t = 0; t < cols.size(); ++t) out[cols[t]] = vals[t];
            return out;
        };
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Eigen::Matrix2d pair;
                pair.row(0) = dense_row(i);
                pair.row(1) = dense_row(j);
                const double det = pair(0, 0) * pair(1, 1) - pair(0, 1) * pair(1, 0);
                if (std::fabs(det) < 1e-12) continue;
                for (int s1 = -1; s1 <= 1; s1 += 2)
                    for (int s2 = -1; s2 <= 1; s2 += 2) {
                        const double b1 = s1, b2 = s2;
                        xi[0] = (b1 * pair(1, 1) - b2 * pair(0, 1)) / det;
                        xi[1] = (b2 * pair(0, 0) - b1 * pair(1, 0)) / det;
                        bool feasible = true;
                        for (int r = 0; r < n && feasible; ++r)
                            if (std::fabs(a.row_dot(r, xi)) > 1.0 + 1e-9) feasible = false;
                        if (!feasible) continue;
                        const double q = xi.dot(m * xi);
                        if (q > outer_worst) {
                            outer_worst = q;
                            outer_witness = xi;
                        }
                    }
            }
    } else {
        // Hit-and-run inside the polytope; interior points give a necessary check.
        Eigen::VectorXd pos = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd dir(d);
        const long warmup = 64;
        for (long s = 0; s < warmup + num_samples; ++s) {
            for (int j = 0; j < d; ++j) dir[j] = rng.gaussian();
            const double norm = dir.norm();
            if (norm == 0.0) continue;
            dir /= norm;
            double lo = -std::numeric_limits<double>::infinity();
            double hi = std::numeric_limits<double>::infinity();
            for (int r = 0; r < n; ++r) {
                const double ax = a.row_dot(r, pos);
                const double ad = a.row_dot(r, dir);
                if (std::fabs(ad) < 1e-300) continue;
                const double t1 = (1.0 - ax) / ad;
                const double t2 = (-1.0 - ax) / ad;
                lo = std::max(lo, std::min(t1, t2));
                hi = std::min(hi, std::max(t1, t2));
            }
            if (!(hi > lo)) continue;
            pos += dir * (lo + (hi - lo) * rng.uniform01());
            if (s < warmup) continue;
            const double q = pos.dot(m * pos);
            if (q > outer_worst) {
                outer_worst = q;
                outer_witness = pos;
            }
        }
    }
    if (outer_worst > static_cast<double>(d) + 1e-9) report.outer_pass = false;

    if (!report.inner_pass) {
        report.worst_row = inner_row;
        report.witness = inner_witness;
        report.worst_value = inner_worst;
    } else if (!report.outer_pass) {
        report.witness = outer_witness;
        report.worst_value = outer_worst;
    } else {
        report.worst_row = inner_row;
        report.witness = inner_witness;
        report.worst_value = inner_worst;
    }
    return report;
}

SpectralReport spectral_approx_check(const Eigen::MatrixXd& h, const Eigen::MatrixXd& h_tilde,
                                     double eps0) {
    const int d = static_cast<int>(h.rows());
    if (h.cols() != d || h_tilde.rows() != d || h_tilde.cols() != d)
        throw std::invalid_argument("spectral_approx_check: dimension mismatch");
    Eigen::MatrixXd l = h;
    const int bad = oracle::naive_cholesky(l);
    if (bad >= 0)
        throw factorization_error("spectral_approx_check: reference matrix is not positive definite (pivot column " +
                                      std::to_string(bad) + ")",
                                  bad);
    // B = L^{-1} h_tilde L^{-T}, eigenvalues are the generalized ones.
    Eigen::MatrixXd b = h_tilde;
    Eigen::VectorXd colv(d);
    for (int j = 0; j < d; ++j) {
        colv = b.col(j);
        oracle::naive_solve_lower(l, colv);
        b.col(j) = colv;
    }
    b.transposeInPlace();
    for (int j = 0; j < d; ++j) {
        colv = b.col(j);
        oracle::naive_solve_lower(l, colv);
        b.col(j) = colv;
    }
    Eigen::VectorXd lambda;
    Eigen::MatrixXd vecs;
    oracle::jacobi_eigen(0.5 * (b + b.transpose()), lambda, vecs);
    SpectralReport report;
    report.min_ratio = lambda[0];
    report.max_ratio = lambda[d - 1];
    report.pass = report.min_ratio >= 1.0 - eps0 - 1e-9 && report.max_ratio <= 1.0 + eps0 + 1e-9;
    const int extreme = std::fabs(report.max_ratio - 1.0) >= std::fabs(report.min_ratio - 1.0) ? d - 1 : 0;
    Eigen::VectorXd z = vecs.col(extreme);
    oracle::naive_solve_lower_transpose(l, z);
    report.witness = z;
    return report;
}

double convexity_probe(const ConstraintMatrix& a, const Eigen::VectorXd& v1,
                       const Eigen::VectorXd& v2, int row) {
    if (row < 0 || row >= a.rows()) throw std::invalid_argument("convexity_probe: row out of range");
    const Eigen::VectorXd mid = 0.5 * (v1 + v2);
    const double p1 = std::log(oracle::naive_sigma(a, v1)[row]);
    const double p2 = std::log(oracle::naive_sigma(a, v2)[row]);
    const double pm = std::log(oracle::naive_sigma(a, mid)[row]);
    return pm - 0.5 * (p1 + p2);
}

}  // namespace johnell
