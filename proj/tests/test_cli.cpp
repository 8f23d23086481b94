#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "johnell/io.hpp"
#include "test_support.hpp"

using namespace johnell;

namespace {

namespace fs = std::filesystem;

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "johnell_cli_tests";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out_p = work_dir() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err_p = work_dir() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd =
        std::string("\"") + JOHNELL_CLI_PATH + "\" " + args + " > " + out_p.string() + " 2> " + err_p.string();
    const int raw = std::system(cmd.c_str());
    CliResult res;
    REQUIRE(raw != -1);
    REQUIRE(WIFEXITED(raw));
    res.code = WEXITSTATUS(raw);
    res.out = slurp(out_p);
    res.err = slurp(err_p);
    return res;
}

}  // namespace

TEST_CASE("gen subcommands write readable matrix market files") {
    const fs::path f = work_dir() / "gen_random.mtx";
    CliResult r = run_cli("gen random --n 60 --d 5 --density 0.6 --seed 3 --output " + f.string());
    CHECK(r.code == 0);
    CHECK(r.out.find("wrote 60 x 5") != std::string::npos);
    ConstraintMatrix a = read_matrix_market(f.string());
    CHECK(a.rows() == 60);
    CHECK(a.cols() == 5);

    const fs::path b = work_dir() / "gen_banded.mtx";
    CHECK(run_cli("gen banded --n 120 --d 10 --bandwidth 2 --seed 4 --output " + b.string()).code == 0);
    ConstraintMatrix ab = read_matrix_market(b.string());
    CHECK(ab.max_row_nnz() <= 3);

    const fs::path p = work_dir() / "gen_poly.mtx";
    CHECK(run_cli("gen polygon2d --n 9 --output " + p.string()).code == 0);
    CHECK(read_matrix_market(p.string()).cols() == 2);
}

TEST_CASE("solve prints a summary and writes a valid document") {
    const fs::path inst = work_dir() / "solve_inst.mtx";
    REQUIRE(run_cli("gen banded --n 200 --d 12 --bandwidth 2 --seed 7 --output " + inst.string()).code == 0);

    const fs::path doc_p = work_dir() / "solve_doc.json";
    CliResult r = run_cli("solve --input " + inst.string() +
                          " --variant exact --epsilon 0.3 --verify cert --output " + doc_p.string());
    CHECK(r.code == 0);
    CHECK(r.out.find("variant=exact") != std::string::npos);
    CHECK(r.out.find("certificate: pass") != std::string::npos);
    CHECK(r.out.find("wrote certificate to") != std::string::npos);

    CertificateDocument doc = parse_document(slurp(doc_p));
    CHECK(doc.n == 200);
    CHECK(doc.d == 12);
    CHECK(doc.variant == "exact");
    CHECK(doc.tau_hat == 12);
    CHECK(doc.weights.size() == 200);
    CHECK(doc.epsilon == 0.3);
}

TEST_CASE("solve --json emits the document itself") {
    const fs::path inst = work_dir() / "json_inst.mtx";
    REQUIRE(run_cli("gen banded --n 150 --d 10 --bandwidth 2 --seed 8 --output " + inst.string()).code == 0);
    CliResult r = run_cli("solve --input " + inst.string() + " --variant treewidth --json");
    CHECK(r.code == 0);
    CertificateDocument doc = parse_document(r.out);
    CHECK(doc.variant == "treewidth");
    CHECK(doc.tau_hat == 3);  // bandwidth + 1, not d
    std::string why;
    CHECK(validate_document_json(nlohmann::ordered_json::parse(r.out), &why));
}

TEST_CASE("identical invocations produce byte-identical documents") {
    const fs::path inst = work_dir() / "repro_inst.mtx";
    REQUIRE(run_cli("gen random --n 300 --d 8 --density 0.8 --seed 9 --output " + inst.string()).code == 0);

    const fs::path d1 = work_dir() / "repro_1.json";
    const fs::path d2 = work_dir() / "repro_2.json";
    const std::string common =
        "solve --input " + inst.string() + " --variant sketch --epsilon 0.5 --seed 11 --output ";
    REQUIRE(run_cli(common + d1.string()).code == 0);
    REQUIRE(run_cli(common + d2.string()).code == 0);
    const std::string bytes = slurp(d1);
    CHECK_FALSE(bytes.empty());
    CHECK(bytes == slurp(d2));

    const fs::path d3 = work_dir() / "repro_3.json";
    REQUIRE(run_cli("solve --input " + inst.string() +
                    " --variant sketch --epsilon 0.5 --seed 12 --output " + d3.string())
                .code == 0);
    CHECK(bytes != slurp(d3));
}

TEST_CASE("full verification passes on a polygon") {
    const fs::path inst = work_dir() / "poly_inst.mtx";
    REQUIRE(run_cli("gen polygon2d --n 7 --output " + inst.string()).code == 0);
    CliResult r = run_cli("solve --input " + inst.string() +
                          " --variant exact --epsilon 0.25 --verify full --samples 2000");
    CHECK(r.code == 0);
    CHECK(r.out.find("certificate: pass") != std::string::npos);
    CHECK(r.out.find("containment: inner pass, outer pass (vertex enumeration)") != std::string::npos);
    CHECK(r.out.find("objective gap:") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("usage and input problems exit with code 2") {
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("solve").code == 2);  // --input is required
    CHECK(run_cli("solve --input /nonexistent/x.mtx").code == 2);

    const fs::path inst = work_dir() / "usage_inst.mtx";
    REQUIRE(run_cli("gen banded --n 40 --d 4 --bandwidth 1 --seed 2 --output " + inst.string()).code == 0);
    CHECK(run_cli("solve --input " + inst.string() + " --variant sideways").code == 2);
    // --order is a treewidth concept.
    const fs::path ord = work_dir() / "usage_order.txt";
    {
        std::ofstream o(ord);
        o << "0 1 2 3\n";
    }
    CliResult r = run_cli("solve --input " + inst.string() + " --variant exact --order " + ord.string());
    CHECK(r.code == 2);
    CHECK(r.err.find("treewidth") != std::string::npos);
    // Not a permutation.
    {
        std::ofstream o(ord);
        o << "0 1 2 2\n";
    }
    CHECK(run_cli("solve --input " + inst.string() + " --variant treewidth --order " + ord.string()).code == 2);
}

TEST_CASE("solver and numerical failures exit with code 3") {
    // Second column is identically zero: the Gram factorization must give up.
    const fs::path singular = work_dir() / "singular.mtx";
    {
        std::ofstream o(singular);
        o << "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 1 1\n";
    }
    CliResult r = run_cli("solve --input " + singular.string() + " --variant exact");
    CHECK(r.code == 3);
    CHECK(r.err.find("numerical failure") != std::string::npos);

    const fs::path inst = work_dir() / "hard_inst.mtx";
    REQUIRE(run_cli("gen random --n 100 --d 5 --density 1.0 --seed 6 --output " + inst.string()).code == 0);
    r = run_cli("solve --input " + inst.string() +
                " --variant exact --epsilon 0.05 --max-iterations 2 --convergence-tol 0");
    CHECK(r.code == 3);
    CHECK(r.err.find("solver failure") != std::string::npos);
}

TEST_CASE("an elimination order file drives the treewidth variant") {
    const fs::path inst = work_dir() / "order_inst.mtx";
    REQUIRE(run_cli("gen banded --n 150 --d 12 --bandwidth 2 --seed 13 --output " + inst.string()).code == 0);
    const fs::path ord = work_dir() / "order_reversed.txt";
    {
        std::ofstream o(ord);
        for (int i = 11; i >= 0; --i) o << i << "\n";
    }
    const fs::path with_p = work_dir() / "order_with.json";
    const fs::path without_p = work_dir() / "order_without.json";
    REQUIRE(run_cli("solve --input " + inst.string() + " --variant treewidth --order " + ord.string() +
                    " --output " + with_p.string())
                .code == 0);
    REQUIRE(run_cli("solve --input " + inst.string() + " --variant treewidth --output " + without_p.string())
                .code == 0);
    CertificateDocument with_doc = parse_document(slurp(with_p));
    CertificateDocument without_doc = parse_document(slurp(without_p));
    REQUIRE(with_doc.weights.size() == without_doc.weights.size());
    for (std::size_t i = 0; i < with_doc.weights.size(); ++i)
        CHECK(with_doc.weights[i] == doctest::Approx(without_doc.weights[i]).epsilon(1e-9));
    CHECK(with_doc.tau_hat == 3);  // reversed banded stays banded
}

TEST_CASE("bench emits one CSV row per grid cell") {
    const fs::path csv_p = work_dir() / "bench.csv";
    CliResult r = run_cli(
        "bench --family banded --n 80 --d 8 --bandwidth 2 --variant exact --variant treewidth "
        "--seeds 1 --seeds 2 --epsilon 0.5 --output " +
        csv_p.string());
    CHECK(r.code == 0);
    std::istringstream csv(slurp(csv_p));
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line ==
          "variant,n,d,nnz,tau_hat,epsilon,seed,iterations,total_ms,gram_ms,factor_ms,"
          "scores_ms,sample_ms,sketch_ms,sigma_max,pass");
    int rows = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        CHECK(line.substr(line.size() - 5) == ",true");
    }
    CHECK(rows == 4);  // two variants, two seeds
}
