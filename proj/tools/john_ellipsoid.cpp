// Command-line surface: solve (with optional verification), gen, bench.
// Exit codes: 0 ok, 1 verification failure, 2 input error, 3 numerical failure.
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"

#include "johnell/core.hpp"
#include "johnell/fast_solver.hpp"
#include "johnell/io.hpp"
#include "johnell/treewidth.hpp"
#include "johnell/verify.hpp"

namespace {

using namespace johnell;

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double wall_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

struct SolveArgs {
    std::string input;
    std::string output;
    std::string order_path;
    std::string variant = "exact";
    std::string verify = "none";
    bool json = false;
    bool timings = false;
    long containment_samples = 10000;
    double epsilon0 = 0.0;
    bool epsilon0_set = false;
    SolverConfig cfg;
};

EliminationOrder read_order_file(const std::string& path, int d) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open order file '" + path + "'", 0);
    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(d));
    long long v;
    while (in >> v) perm.push_back(static_cast<int>(v));
    if (static_cast<int>(perm.size()) != d)
        throw io_error("order file holds " + std::to_string(perm.size()) + " indices, expected " +
                           std::to_string(d),
                       0);
    return order_from_permutation(std::move(perm));
}

int tau_hat_of(const ConstraintMatrix& a, const std::string& variant,
               const EliminationOrder* user_order) {
    if (variant != "treewidth") return a.cols();
    const SparsityPattern pattern = gram_pattern(a);
    const EliminationOrder order = user_order ? *user_order : fill_reducing_order(pattern);
    return symbolic_factorization(pattern, order).max_col_nnz;
}

int run_solve(const SolveArgs& args) {
    ConstraintMatrix a = read_matrix_market(args.input);
    SolverConfig cfg = args.cfg;
    if (args.epsilon0_set) cfg.epsilon0 = args.epsilon0;
    std::optional<EliminationOrder> order;
    if (!args.order_path.empty()) {
        if (args.variant != "treewidth")
            throw std::invalid_argument("--order applies to the treewidth variant only");
        order = read_order_file(args.order_path, a.cols());
    }

    IterationTrace trace;
    EllipsoidCertificate cert;
    if (args.variant == "exact") cert = exact_solve(a, cfg, &trace);
    else if (args.variant == "sketch") cert = fast_general_solve(a, cfg, &trace);
    else if (args.variant == "treewidth")
        cert = treewidth_solve(a, cfg, order ? &*order : nullptr, &trace);
    else throw std::invalid_argument("unknown variant '" + args.variant + "'");

    CertificateDocument doc = make_document(a, args.input, cert, cfg, trace);
    doc.tau_hat = tau_hat_of(a, args.variant, order ? &*order : nullptr);
    doc.has_timings = args.timings;
    nlohmann::ordered_json j = document_to_json(doc);

    int rc = 0;
    std::ostringstream human;
    human << "variant=" << cert.variant << " n=" << a.rows() << " d=" << a.cols()
          << " nnz=" << a.nnz() << " tau_hat=" << doc.tau_hat << "\n"
          << "iterations=" << cert.iterations << " sigma_max=" << fmt(cert.sigma_max)
          << " weight_sum=" << fmt(cert.weight_sum) << "\n";

    if (args.verify == "cert" || args.verify == "full") {
        const CertificateReport rep = certificate_check(a, cert);
        j["verification"]["certificate"] = {{"pass", rep.pass},
                                            {"sigma_max", rep.sigma_max},
                                            {"weight_sum", rep.weight_sum},
                                            {"bound", rep.bound},
                                            {"worst_row", rep.worst_row},
                                            {"reason", rep.reason}};
        human << "certificate: " << (rep.pass ? "pass" : "FAIL " + rep.reason)
              << " (sigma_max " << fmt(rep.sigma_max) << " vs bound " << fmt(rep.bound) << ")\n";
        if (!rep.pass) rc = 1;
    }
    if (args.verify == "full") {
        const ContainmentReport rep = containment_test(a, cert, args.containment_samples, cfg.seed);
        std::vector<double> witness(rep.witness.data(), rep.witness.data() + rep.witness.size());
        j["verification"]["containment"] = {
            {"inner_pass", rep.inner_pass}, {"outer_pass", rep.outer_pass},
            {"outer_exact", rep.outer_exact}, {"samples", rep.samples},
            {"worst_row", rep.worst_row},   {"worst_value", rep.worst_value},
            {"witness", witness}};
        human << "containment: inner " << (rep.inner_pass ? "pass" : "FAIL") << ", outer "
              << (rep.outer_pass ? "pass" : "FAIL") << (rep.outer_exact ? " (vertex enumeration)" : " (sampled)")
              << "\n";
        if (!rep.inner_pass || !rep.outer_pass) rc = 1;

        if (a.rows() <= 500) {
            const BruteForceResult ref = brute_force_solve(a, 1e-6);
            const double solver_obj = oracle::naive_objective(a, cert.weights);
            const double gap = solver_obj - ref.objective;
            const double bound = cert.variant == "sketch"
                                     ? (1.0 + cert.epsilon) * (1.0 + cert.epsilon)
                                     : 1.0 + cert.epsilon;
            const double gap_bound = a.cols() * std::log(bound);
            const bool pass = gap >= -1e-5 * std::max(1, a.cols()) && gap <= gap_bound + 1e-6;
            j["verification"]["objective_gap"] = {{"solver_objective", solver_obj},
                                                  {"reference_objective", ref.objective},
                                                  {"gap", gap},
                                                  {"bound", gap_bound},
                                                  {"pass", pass}};
            human << "objective gap: " << fmt(gap) << " (bound " << fmt(gap_bound) << ") "
                  << (pass ? "pass" : "FAIL") << "\n";
            if (!pass) rc = 1;
        }
    }

    const std::string rendered = j.dump(2) + "\n";
    if (!args.output.empty()) {
        std::ofstream out(args.output);
        if (!out) throw io_error("cannot open '" + args.output + "' for writing", 0);
        out << rendered;
        if (!out) throw io_error("write failed for '" + args.output + "'", 0);
    }
    if (args.json) std::cout << rendered;
    else {
        std::cout << human.str();
        if (!args.output.empty()) std::cout << "wrote certificate to " << args.output << "\n";
    }
    return rc;
}

struct BenchArgs {
    std::string family = "banded";
    std::vector<int> n{1000};
    std::vector<int> d{50};
    std::vector<int> bandwidth{8};
    std::vector<double> density{0.1};
    std::vector<std::string> variant{"exact", "treewidth"};
    std::vector<double> epsilon{0.5};
    std::vector<std::uint64_t> seeds{0};
    std::string output;
    SolverConfig cfg;
};

struct BenchRow {
    std::string variant;
    int n = 0, d = 0;
    std::int64_t nnz = 0;
    int tau_hat = 0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    long iterations = 0;
    double total_ms = 0.0, gram_ms = 0.0, factor_ms = 0.0, scores_ms = 0.0, sample_ms = 0.0,
           sketch_ms = 0.0;
    double sigma_max = 0.0;
    bool pass = false;
    double shape = 0.0;  // bandwidth or density, for ordering only
};

int run_bench(const BenchArgs& args) {
    std::vector<double> shapes;
    if (args.family == "banded")
        for (int b : args.bandwidth) shapes.push_back(static_cast<double>(b));
    else if (args.family == "random")
        for (double v : args.density) shapes.push_back(v);
    else if (args.family == "polygon2d")
        shapes.push_back(0.0);
    else throw std::invalid_argument("unknown family '" + args.family + "'");

    std::vector<BenchRow> rows;
    for (const std::string& variant : args.variant)
        for (int n : args.n)
            for (int d : args.d)
                for (double shape : shapes)
                    for (double eps : args.epsilon)
                        for (std::uint64_t seed : args.seeds) {
                            BenchRow row;
                            row.variant = variant;
                            row.n = n;
                            row.d = args.family == "polygon2d" ? 2 : d;
                            row.shape = shape;
                            row.epsilon = eps;
                            row.seed = seed;
                            try {
                                GeneratedInstance inst =
                                    args.family == "banded"
                                        ? gen_banded(n, d, static_cast<int>(shape), seed)
                                        : args.family == "random"
                                              ? gen_random(n, d, shape, seed)
                                              : gen_polygon2d(n);
                                const ConstraintMatrix& a = inst.matrix;
                                row.nnz = a.nnz();
                                row.tau_hat = tau_hat_of(a, variant, nullptr);
                                SolverConfig cfg = args.cfg;
                                cfg.epsilon = eps;
                                cfg.seed = seed;
                                IterationTrace trace;
                                EllipsoidCertificate cert;
                                const auto t0 = std::chrono::steady_clock::now();
                                if (variant == "exact") cert = exact_solve(a, cfg, &trace);
                                else if (variant == "sketch")
                                    cert = fast_general_solve(a, cfg, &trace);
                                else if (variant == "treewidth")
                                    cert = treewidth_solve(a, cfg, nullptr, &trace);
                                else
                                    throw std::invalid_argument("unknown variant '" + variant + "'");
                                row.total_ms = wall_ms(t0);
                                row.iterations = trace.steps_computed;
                                for (const IterationRecord& rec : trace.iterations) {
                                    row.gram_ms += rec.gram_ms;
                                    row.factor_ms += rec.factor_ms;
                                    row.scores_ms += rec.scores_ms;
                                    row.sample_ms += rec.sample_ms;
                                    row.sketch_ms += rec.sketch_ms;
                                }
                                row.sigma_max = cert.sigma_max;
                                row.pass = certificate_check(a, cert).pass;
                            } catch (const std::exception& e) {
                                std::cerr << "bench cell failed (" << variant << " n=" << n
                                          << " d=" << d << " seed=" << seed << "): " << e.what()
                                          << "\n";
                                row.pass = false;
                            }
                            rows.push_back(std::move(row));
                        }

    std::sort(rows.begin(), rows.end(), [](const BenchRow& x, const BenchRow& y) {
        return std::tie(x.variant, x.n, x.d, x.shape, x.epsilon, x.seed) <
               std::tie(y.variant, y.n, y.d, y.shape, y.epsilon, y.seed);
    });

    std::ostringstream csv;
    csv << "variant,n,d,nnz,tau_hat,epsilon,seed,iterations,total_ms,gram_ms,factor_ms,"
           "scores_ms,sample_ms,sketch_ms,sigma_max,pass\n";
    for (const BenchRow& r : rows)
        csv << r.variant << "," << r.n << "," << r.d << "," << r.nnz << "," << r.tau_hat << ","
            << fmt(r.epsilon) << "," << r.seed << "," << r.iterations << "," << fmt(r.total_ms)
            << "," << fmt(r.gram_ms) << "," << fmt(r.factor_ms) << "," << fmt(r.scores_ms) << ","
            << fmt(r.sample_ms) << "," << fmt(r.sketch_ms) << "," << fmt(r.sigma_max) << ","
            << (r.pass ? "true" : "false") << "\n";

    if (!args.output.empty()) {
        std::ofstream out(args.output);
        if (!out) throw io_error("cannot open '" + args.output + "' for writing", 0);
        out << csv.str();
        if (!out) throw io_error("write failed for '" + args.output + "'", 0);
    } else {
        std::cout << csv.str();
    }
    return 0;
}

void add_tuning_options(CLI::App* cmd, SolverConfig& cfg) {
    cmd->add_option("--t-constant", cfg.t_constant, "Iteration budget constant c_T");
    cmd->add_option("--s-constant", cfg.s_constant, "Sketch row constant c_s");
    cmd->add_option("--sample-constant", cfg.sample_constant, "Row sample constant c_N");
    cmd->add_option("--embed-constant", cfg.embed_constant, "Leverage embedding constant c_e");
    cmd->add_option("--jl-constant", cfg.jl_constant, "Leverage estimator row constant c_k");
    cmd->add_option("--sigma-eps", cfg.sigma_eps, "Leverage estimate accuracy");
    cmd->add_option("--max-iterations", cfg.max_iterations, "Iteration budget cap");
    cmd->add_option("--convergence-tol", cfg.convergence_tol,
                    "Early-stop step tolerance (0 disables)");
    cmd->add_flag("--no-sketch", [&cfg](std::int64_t) { cfg.use_sketch = false; },
                  "Sketch variant: use exact quadratic forms");
    cmd->add_flag("--no-sampling", [&cfg](std::int64_t) { cfg.use_sampling = false; },
                  "Sketch variant: use the exact weighted Gram");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"(1+eps)-approximate John ellipsoids of centrally symmetric polytopes"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    CLI::App* solve = app.add_subcommand("solve", "Solve one instance and emit a certificate document");
    solve->add_option("--input", solve_args.input, "Matrix Market instance")->required();
    solve->add_option("--variant", solve_args.variant, "exact | sketch | treewidth")
        ->check(CLI::IsMember({"exact", "sketch", "treewidth"}));
    solve->add_option("--epsilon", solve_args.cfg.epsilon, "Approximation target in (0, 1)");
    solve->add_option("--delta", solve_args.cfg.delta, "Failure budget (sketch variant)");
    solve->add_option("--seed", solve_args.cfg.seed, "Master seed");
    solve->add_option("--order", solve_args.order_path,
                      "Elimination order file (treewidth): d whitespace-separated 0-based columns");
    solve->add_option("--output", solve_args.output, "Write the certificate document here");
    solve->add_option("--verify", solve_args.verify, "none | cert | full")
        ->check(CLI::IsMember({"none", "cert", "full"}));
    solve->add_flag("--json", solve_args.json, "Print the document to stdout instead of a summary");
    solve->add_flag("--timings", solve_args.timings,
                    "Embed wall times in the document (breaks byte reproducibility)");
    solve->add_option("--samples", solve_args.containment_samples,
                      "Containment sample count for --verify full");
    solve->add_option("--epsilon0", solve_args.epsilon0, "Sampling precision override")
        ->each([&](const std::string&) { solve_args.epsilon0_set = true; });
    add_tuning_options(solve, solve_args.cfg);

    CLI::App* gen = app.add_subcommand("gen", "Generate a Matrix Market instance");
    gen->require_subcommand(1);
    int gn = 100, gd = 10, gbw = 2;
    double gdensity = 0.1;
    std::uint64_t gseed = 0;
    std::string gout;
    CLI::App* grandom = gen->add_subcommand("random", "Rows with ~density*d Gaussian entries");
    grandom->add_option("--n", gn, "Rows")->required();
    grandom->add_option("--d", gd, "Columns")->required();
    grandom->add_option("--density", gdensity, "Fraction of nonzeros per row, (0, 1]");
    grandom->add_option("--seed", gseed, "Seed");
    grandom->add_option("--output", gout, "Output path")->required();
    CLI::App* gbanded = gen->add_subcommand("banded", "Dense Gaussian windows of bandwidth+1 columns");
    gbanded->add_option("--n", gn, "Rows")->required();
    gbanded->add_option("--d", gd, "Columns")->required();
    gbanded->add_option("--bandwidth", gbw, "Window length minus one");
    gbanded->add_option("--seed", gseed, "Seed");
    gbanded->add_option("--output", gout, "Output path")->required();
    CLI::App* gpoly = gen->add_subcommand("polygon2d", "Unit normals at angles k*pi/n");
    gpoly->add_option("--n", gn, "Directions")->required();
    gpoly->add_option("--output", gout, "Output path")->required();

    BenchArgs bench_args;
    CLI::App* bench = app.add_subcommand("bench", "Run a solver grid and emit CSV");
    bench->add_option("--family", bench_args.family, "banded | random | polygon2d");
    bench->add_option("--n", bench_args.n, "Row counts");
    bench->add_option("--d", bench_args.d, "Column counts");
    bench->add_option("--bandwidth", bench_args.bandwidth, "Bandwidths (banded family)");
    bench->add_option("--density", bench_args.density, "Densities (random family)");
    bench->add_option("--variant", bench_args.variant, "Variants to run");
    bench->add_option("--epsilon", bench_args.epsilon, "Approximation targets");
    bench->add_option("--seeds", bench_args.seeds, "Seeds");
    bench->add_option("--delta", bench_args.cfg.delta, "Failure budget (sketch variant)");
    bench->add_option("--output", bench_args.output, "CSV path (default stdout)");
    add_tuning_options(bench, bench_args.cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*solve) return run_solve(solve_args);
        if (*gen) {
            GeneratedInstance inst = *grandom ? gen_random(gn, gd, gdensity, gseed)
                                   : *gbanded ? gen_banded(gn, gd, gbw, gseed)
                                              : gen_polygon2d(gn);
            write_matrix_market(gout, inst.matrix, inst.spec);
            std::cout << "wrote " << inst.matrix.rows() << " x " << inst.matrix.cols() << " ("
                      << inst.matrix.nnz() << " nnz) to " << gout << "\n";
            return 0;
        }
        if (*bench) return run_bench(bench_args);
    } catch (const io_error& e) {
        std::cerr << "input error: " << e.what();
        if (e.line_number > 0) std::cerr << " (line " << e.line_number << ")";
        std::cerr << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const solver_error& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    } catch (const factorization_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
