// Acceptance gate: eleven end-to-end checks against the public API and the
// CLI. Each prints exactly one "criterion N: PASS/FAIL" line; the process
// exits nonzero if any selected criterion fails. Run with no arguments for
// the full gate or with a single number to run one criterion.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "johnell/fast_solver.hpp"
#include "johnell/io.hpp"
#include "johnell/rng.hpp"
#include "johnell/sketch.hpp"
#include "johnell/treewidth.hpp"
#include "johnell/verify.hpp"

using namespace johnell;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets. These are the contract; do not loosen them
// to make a run pass.
constexpr double kEpsilon = 0.5;           // criteria 1, 2, 10
constexpr double kDelta = 0.05;            // criteria 1, 2
constexpr int kSharedInstances = 50;       // criteria 1, 2, 4
constexpr double kSketchPassFraction = 0.90;
constexpr double kWeightSumRel = 1e-8;     // criteria 2, 4
constexpr double kIterateUpper = 1.0 + 1e-10;
constexpr double kOracleGap = 1e-4;        // criterion 3
constexpr double kOracleResidual = 1e-4;
constexpr double kKnownOptTol = 1e-6;      // criterion 5
constexpr double kSpectralEps0 = 0.25;     // criterion 6
constexpr double kSpectralDelta0 = 0.05;
constexpr int kSpectralTrials = 100;
constexpr int kSpectralMinPass = 95;
constexpr int kSketchRows = 2000;          // criterion 7
constexpr int kSketchSeeds = 200;
constexpr double kMomentTol = 0.01;
constexpr double kGradientTol = 1e-5;      // criterion 8
constexpr long kContainSamples = 10000;    // criterion 9
constexpr double kScaleRatioLo = 2.5;      // criterion 10
constexpr double kScaleRatioHi = 6.0;
constexpr double kTimingTConstant = 1.4;   // criterion 10 budget constant
constexpr double kBudget1Sec = 120.0;
constexpr double kBudget3Sec = 60.0;
constexpr double kBudget6Sec = 30.0;

double now_sec() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// The shared instance grid for criteria 1, 2 and 4: n spread over [50, 5000],
// d over [2, 20], three densities.
GeneratedInstance shared_instance(int i) {
    const int n = 50 + (i * 101) % 4951;
    const int d = 2 + (i * 7) % 19;
    const double density = 0.35 + 0.325 * (i % 3);
    return gen_random(n, d, density, 1000 + static_cast<std::uint64_t>(i));
}

bool criterion_1() {
    const double t0 = now_sec();
    int pass = 0;
    for (int i = 0; i < kSharedInstances; ++i) {
        GeneratedInstance inst = shared_instance(i);
        SolverConfig cfg;
        cfg.epsilon = kEpsilon;
        cfg.delta = kDelta;
        cfg.seed = 2000 + static_cast<std::uint64_t>(i);
        try {
            EllipsoidCertificate cert = fast_general_solve(inst.matrix, cfg);
            if (certificate_check(inst.matrix, cert).pass) ++pass;
        } catch (const std::exception&) {
        }
    }
    const double elapsed = now_sec() - t0;
    const bool ok = pass >= static_cast<int>(kSketchPassFraction * kSharedInstances) &&
                    elapsed < kBudget1Sec;
    std::printf("criterion 1: %s (%d/%d sketched certificates at bound (1+eps)^2, %.1f s)\n",
                ok ? "PASS" : "FAIL", pass, kSharedInstances, elapsed);
    return ok;
}

bool criterion_2() {
    int exact_pass = 0, tree_pass = 0, sum_ok = 0;
    for (int i = 0; i < kSharedInstances; ++i) {
        GeneratedInstance inst = shared_instance(i);
        SolverConfig cfg;
        cfg.epsilon = kEpsilon;
        EllipsoidCertificate ex = exact_solve(inst.matrix, cfg);
        if (certificate_check(inst.matrix, ex).pass) ++exact_pass;
        EllipsoidCertificate tw = treewidth_solve(inst.matrix, cfg);
        if (certificate_check(inst.matrix, tw).pass) ++tree_pass;
        const double d = inst.matrix.cols();
        if (std::fabs(tw.weight_sum - d) <= kWeightSumRel * d) ++sum_ok;
    }
    const bool ok = exact_pass == kSharedInstances && tree_pass == kSharedInstances &&
                    sum_ok == kSharedInstances;
    std::printf(
        "criterion 2: %s (exact %d/%d, treewidth %d/%d at bound 1+eps, unnormalized sums %d/%d)\n",
        ok ? "PASS" : "FAIL", exact_pass, kSharedInstances, tree_pass, kSharedInstances, sum_ok,
        kSharedInstances);
    return ok;
}

bool criterion_3() {
    const double t0 = now_sec();
    int ok_count = 0;
    double worst_gap = 0.0, worst_res = 0.0;
    for (int i = 0; i < 20; ++i) {
        const int n = 20 + (i * 9) % 81;
        const int d = 2 + i % 4;
        GeneratedInstance inst = gen_random(n, d, 1.0, 3000 + static_cast<std::uint64_t>(i));
        SolverConfig cfg;
        cfg.epsilon = 1e-4;
        EllipsoidCertificate cert = exact_solve(inst.matrix, cfg);
        BruteForceResult ref = brute_force_solve(inst.matrix, 1e-6);
        const double gap = std::fabs(objective(inst.matrix, cert.weights) - ref.objective);
        const OptimalityResidual solver_res = optimality_residual(inst.matrix, cert.weights);
        const double res = std::max({solver_res.comp_slack, solver_res.sigma_violation,
                                     ref.residual.comp_slack, ref.residual.sigma_violation});
        worst_gap = std::max(worst_gap, gap);
        worst_res = std::max(worst_res, res);
        if (gap <= kOracleGap && res <= kOracleResidual) ++ok_count;
    }
    const double elapsed = now_sec() - t0;
    const bool ok = ok_count == 20 && elapsed < kBudget3Sec;
    std::printf(
        "criterion 3: %s (%d/20 within oracle gap, worst gap %.2e, worst residual %.2e, %.1f s)\n",
        ok ? "PASS" : "FAIL", ok_count, worst_gap, worst_res, elapsed);
    return ok;
}

bool criterion_4() {
    long violations = 0;
    long records = 0;
    auto scan = [&](const ConstraintMatrix& a, const SolverConfig& cfg) {
        IterationTrace trace;
        exact_solve(a, cfg, &trace);
        const double d = a.cols();
        for (const IterationRecord& rec : trace.iterations) {
            ++records;
            if (rec.min_weight < 0.0) ++violations;
            if (rec.max_weight > kIterateUpper) ++violations;
            if (std::fabs(rec.weight_sum - d) > kWeightSumRel * d) ++violations;
        }
    };
    for (int i = 0; i < kSharedInstances; ++i) {
        GeneratedInstance inst = shared_instance(i);
        SolverConfig cfg;
        cfg.epsilon = kEpsilon;
        scan(inst.matrix, cfg);
    }
    for (int i = 0; i < 20; ++i) {
        GeneratedInstance inst =
            gen_random(20 + (i * 9) % 81, 2 + i % 4, 1.0, 3000 + static_cast<std::uint64_t>(i));
        SolverConfig cfg;
        cfg.epsilon = 1e-4;
        scan(inst.matrix, cfg);
    }
    {
        SolverConfig cfg;
        cfg.epsilon = 0.1;
        scan(gen_polygon2d(3).matrix, cfg);
    }
    const bool ok = violations == 0 && records > 0;
    std::printf("criterion 4: %s (%ld iterates scanned, %ld bound/sum violations)\n",
                ok ? "PASS" : "FAIL", records, violations);
    return ok;
}

bool criterion_5() {
    GeneratedInstance poly = gen_polygon2d(3);
    SolverConfig cfg;
    cfg.epsilon = 0.1;
    EllipsoidCertificate ex = exact_solve(poly.matrix, cfg);
    EllipsoidCertificate tw = treewidth_solve(poly.matrix, cfg);
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        worst = std::max(worst, std::fabs(ex.weights[i] - 2.0 / 3.0));
        worst = std::max(worst, std::fabs(tw.weights[i] - 2.0 / 3.0));
    }
    SolverConfig sketch_cfg;
    sketch_cfg.epsilon = kEpsilon;
    sketch_cfg.delta = kDelta;
    sketch_cfg.seed = 5;
    EllipsoidCertificate sk = fast_general_solve(poly.matrix, sketch_cfg);
    const bool sketch_ok = certificate_check(poly.matrix, sk).pass;
    const bool ok = worst <= kKnownOptTol && sketch_ok;
    std::printf(
        "criterion 5: %s (deterministic weights within %.2e of 2/3, sketched certificate %s)\n",
        ok ? "PASS" : "FAIL", worst, sketch_ok ? "pass" : "FAIL");
    return ok;
}

bool criterion_6() {
    const double t0 = now_sec();
    int pass = 0;
    bool spot_ok = true;
    SolverConfig defaults;
    RandomStream spot_rng(606);
    for (int t = 0; t < kSpectralTrials; ++t) {
        GeneratedInstance inst = gen_random(300, 5, 1.0, 6000 + static_cast<std::uint64_t>(t));
        LeverageEstimate lev =
            approx_leverage_scores(inst.matrix, nullptr, defaults.sigma_eps, kSpectralDelta0,
                                   defaults.embed_constant, defaults.jl_constant,
                                   6100 + static_cast<std::uint64_t>(t));
        SamplingPlan plan = build_sampling_plan(lev.sigma_tilde, 5, kSpectralEps0, kSpectralDelta0,
                                                1.0 + defaults.sigma_eps, defaults.sample_constant,
                                                6200 + static_cast<std::uint64_t>(t));
        Eigen::MatrixXd h_tilde = sampled_gram(inst.matrix, nullptr, plan);
        Eigen::MatrixXd h = gram(inst.matrix, Eigen::VectorXd::Ones(300));
        SpectralReport rep = spectral_approx_check(h, h_tilde, kSpectralEps0);
        if (rep.pass) {
            ++pass;
            // A passing sandwich must bound every direction's Rayleigh ratio.
            if (t < 10) {
                for (int probe = 0; probe < 10; ++probe) {
                    Eigen::VectorXd x(5);
                    for (int j = 0; j < 5; ++j) x[j] = spot_rng.gaussian();
                    const double ratio = x.dot(h_tilde * x) / x.dot(h * x);
                    if (ratio < 1.0 - kSpectralEps0 - 1e-9 || ratio > 1.0 + kSpectralEps0 + 1e-9)
                        spot_ok = false;
                }
            }
        }
    }
    const double elapsed = now_sec() - t0;
    const bool ok = pass >= kSpectralMinPass && spot_ok && elapsed < kBudget6Sec;
    std::printf("criterion 6: %s (%d/%d sandwiches at eps0 = %.2f, Rayleigh spot checks %s, %.1f s)\n",
                ok ? "PASS" : "FAIL", pass, kSpectralTrials, kSpectralEps0,
                spot_ok ? "clean" : "VIOLATED", elapsed);
    return ok;
}

bool criterion_7() {
    const int d = 30;
    RandomStream rng(707);
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.gaussian();
    x /= x.norm();
    double mean = 0.0;
    for (int s = 0; s < kSketchSeeds; ++s) {
        GaussianSketch sk = make_gaussian_sketch(kSketchRows, d, 7000 + static_cast<std::uint64_t>(s));
        mean += (sk.m * x).squaredNorm() / kSketchRows;
    }
    mean /= kSketchSeeds;
    const bool ok = std::fabs(mean - 1.0) <= kMomentTol;
    std::printf("criterion 7: %s (mean sketched norm %.5f over %d seeds, tolerance %.2f)\n",
                ok ? "PASS" : "FAIL", mean, kSketchSeeds, kMomentTol);
    return ok;
}

bool criterion_8() {
    double worst = 0.0;
    RandomStream rng(808);
    for (int i = 0; i < 100; ++i) {
        const int n = 10 + (i * 3) % 31;
        const int d = 2 + i % 5;
        GeneratedInstance inst = gen_random(n, d, 1.0, 8000 + static_cast<std::uint64_t>(i));
        Eigen::VectorXd w(n);
        for (int j = 0; j < n; ++j) w[j] = 0.1 + rng.uniform01();
        Eigen::VectorXd grad = objective_gradient(inst.matrix, w);
        const double h = 1e-6;
        for (int probe = 0; probe < 3; ++probe) {
            const int j = static_cast<int>(rng.bounded(static_cast<std::uint32_t>(n)));
            Eigen::VectorXd wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            const double fd = (objective(inst.matrix, wp) - objective(inst.matrix, wm)) / (2.0 * h);
            const double rel = std::fabs(grad[j] - fd) / std::max(1.0, std::fabs(fd));
            worst = std::max(worst, rel);
        }
    }
    const bool ok = worst <= kGradientTol;
    std::printf("criterion 8: %s (worst relative gradient error %.2e over 100 instances)\n",
                ok ? "PASS" : "FAIL", worst);
    return ok;
}

bool criterion_9() {
    int inner_ok = 0, outer_ok = 0;
    for (int i = 0; i < 20; ++i) {
        ConstraintMatrix a = i < 10 ? gen_polygon2d(3 + 2 * i).matrix
                                    : gen_random(30 + 3 * (i - 10), 2, 1.0,
                                                 9000 + static_cast<std::uint64_t>(i))
                                          .matrix;
        SolverConfig cfg;
        cfg.epsilon = 0.25;
        EllipsoidCertificate cert = exact_solve(a, cfg);
        ContainmentReport rep = containment_test(a, cert, kContainSamples, 9100 + static_cast<std::uint64_t>(i));
        if (rep.inner_pass) ++inner_ok;
        if (rep.outer_pass && rep.outer_exact) ++outer_ok;
    }
    const bool ok = inner_ok == 20 && outer_ok == 20;
    std::printf("criterion 9: %s (inner sampling clean on %d/20, vertex enumeration clean on %d/20)\n",
                ok ? "PASS" : "FAIL", inner_ok, outer_ok);
    return ok;
}

bool criterion_10() {
    SolverConfig cfg;
    cfg.epsilon = kEpsilon;
    cfg.t_constant = kTimingTConstant;

    // Head-to-head at fixed shape.
    GeneratedInstance duel = gen_banded(20000, 1000, 8, 1);
    double t0 = now_sec();
    EllipsoidCertificate tw = treewidth_solve(duel.matrix, cfg);
    const double tree_sec = now_sec() - t0;
    t0 = now_sec();
    EllipsoidCertificate ex = exact_solve(duel.matrix, cfg);
    const double exact_sec = now_sec() - t0;
    const bool duel_ok = tree_sec < exact_sec && certificate_check(duel.matrix, tw).pass &&
                         certificate_check(duel.matrix, ex).pass;

    // Bandwidth doubling at fixed n: per-iteration time should grow roughly
    // like tau_hat^2 (factor in [2.5, 6] per doubling).
    double per_iter[3] = {0, 0, 0};
    const int bws[3] = {4, 8, 16};
    bool cells_ok = true;
    for (int c = 0; c < 3; ++c) {
        GeneratedInstance inst = gen_banded(50000, 1000, bws[c], 2);
        IterationTrace trace;
        t0 = now_sec();
        EllipsoidCertificate cert = treewidth_solve(inst.matrix, cfg, nullptr, &trace);
        const double total = now_sec() - t0;
        if (!certificate_check(inst.matrix, cert).pass || trace.steps_computed <= 0) cells_ok = false;
        per_iter[c] = total / std::max(1L, trace.steps_computed);
    }
    const double r1 = per_iter[1] / per_iter[0];
    const double r2 = per_iter[2] / per_iter[1];
    const bool ratio_ok = cells_ok && r1 >= kScaleRatioLo && r1 <= kScaleRatioHi &&
                          r2 >= kScaleRatioLo && r2 <= kScaleRatioHi;

    const bool ok = duel_ok && ratio_ok;
    std::printf(
        "criterion 10: %s (sparse %.2f s vs dense %.2f s; per-doubling ratios %.2f, %.2f)\n",
        ok ? "PASS" : "FAIL", tree_sec, exact_sec, r1, r2);
    return ok;
}

bool criterion_11() {
    const fs::path dir = fs::temp_directory_path() / "johnell_acceptance";
    fs::create_directories(dir);
    const fs::path inst = dir / "repro.mtx";
    const fs::path doc1 = dir / "doc1.json";
    const fs::path doc2 = dir / "doc2.json";

    auto run = [&](const std::string& args) {
        const std::string cmd = std::string("\"") + JOHNELL_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
        const int raw = std::system(cmd.c_str());
        return raw != -1 && WIFEXITED(raw) && WEXITSTATUS(raw) == 0;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };

    bool ok = run("gen banded --n 2000 --d 50 --bandwidth 4 --seed 5 --output " + inst.string());
    for (const std::string variant : {"sketch", "treewidth", "exact"}) {
        const std::string common = "solve --input " + inst.string() + " --variant " + variant +
                                   " --epsilon 0.5 --seed 11 --output ";
        ok = ok && run(common + doc1.string()) && run(common + doc2.string());
        const std::string b1 = slurp(doc1), b2 = slurp(doc2);
        ok = ok && !b1.empty() && b1 == b2;
    }
    std::printf("criterion 11: %s (repeated CLI runs byte-identical across all variants)\n",
                ok ? "PASS" : "FAIL");
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    int which = 0;
    if (argc > 1) {
        which = std::atoi(argv[1]);
        if (which < 0 || which > 11) {
            std::fprintf(stderr, "usage: %s [criterion 1-11]\n", argv[0]);
            return 2;
        }
    }
    bool (*criteria[])() = {criterion_1, criterion_2, criterion_3, criterion_4,
                            criterion_5, criterion_6, criterion_7, criterion_8,
                            criterion_9, criterion_10, criterion_11};
    bool all_ok = true;
    for (int c = 1; c <= 11; ++c) {
        if (which != 0 && which != c) continue;
        all_ok = criteria[c - 1]() && all_ok;
        std::fflush(stdout);
    }
    return all_ok ? 0 : 1;
}
