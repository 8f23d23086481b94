#include "johnell/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "johnell/rng.hpp"
#include "johnell/treewidth.hpp"

namespace johnell {

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, long line) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end != begin + tok.size() || errno == ERANGE)
        throw io_error("invalid numeric value '" + tok + "'", line);
    return v;
}

long long parse_int(const std::string& tok, long line) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(begin, &end, 10);
    if (end != begin + tok.size() || errno == ERANGE)
        throw io_error("invalid integer '" + tok + "'", line);
    return v;
}

std::string shortest_decimal(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Full column rank check shared by the generators: the unweighted Gram of a
// rank-deficient instance fails its factorization.
bool full_column_rank(const ConstraintMatrix& a) {
    const Eigen::MatrixXd g = gram(a, Eigen::VectorXd::Ones(a.rows()));
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    return llt.info() == Eigen::Success && std::isfinite(g.trace());
}

}  // namespace

ConstraintMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'", 0);
    std::string line;
    long lineno = 0;

    if (!std::getline(in, line)) throw io_error("empty file", 0);
    ++lineno;
    auto header = split_ws(line);
    for (auto& t : header) t = to_lower(t);
    if (header.size() < 5 || header[0] != "%%matrixmarket" || header[1] != "matrix")
        throw io_error("expected '%%MatrixMarket matrix ...' header", lineno);
    const std::string format = header[2];
    if (format != "coordinate" && format != "array")
        throw io_error("unsupported format '" + header[2] + "' (coordinate or array)", lineno);
    if (header[3] != "real")
        throw io_error("unsupported field '" + header[3] + "' (real only)", lineno);
    if (header[4] != "general")
        throw io_error("unsupported symmetry '" + header[4] + "' (general only)", lineno);

    // Size line: first non-comment, non-blank line.
    std::vector<std::string> size_tokens;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        size_tokens = split_ws(line);
        if (!size_tokens.empty()) break;
    }
    if (size_tokens.empty()) throw io_error("missing size line", lineno);

    if (format == "coordinate") {
        if (size_tokens.size() != 3) throw io_error("size line needs 'rows cols entries'", lineno);
        const long long n = parse_int(size_tokens[0], lineno);
        const long long d = parse_int(size_tokens[1], lineno);
        const long long nnz = parse_int(size_tokens[2], lineno);
        if (n < 1 || d < 1 || nnz < 0) throw io_error("nonpositive dimensions", lineno);
        std::vector<Triplet> entries;
        entries.reserve(static_cast<std::size_t>(nnz));
        long long seen = 0;
        while (seen < nnz) {
            if (!std::getline(in, line)) throw io_error("unexpected end of file: entry " +
                                                        std::to_string(seen + 1) + " of " +
                                                        std::to_string(nnz) + " missing", lineno);
            ++lineno;
            const auto toks = split_ws(line);
            if (toks.empty()) continue;
            if (toks.size() != 3) throw io_error("entry needs 'row col value'", lineno);
            const long long i = parse_int(toks[0], lineno);
            const long long j = parse_int(toks[1], lineno);
            const double v = parse_double(toks[2], lineno);
            if (i < 1 || i > n || j < 1 || j > d)
                throw io_error("index (" + std::to_string(i) + ", " + std::to_string(j) +
                                   ") outside " + std::to_string(n) + " x " + std::to_string(d),
                               lineno);
            entries.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
            ++seen;
        }
        while (std::getline(in, line)) {
            ++lineno;
            if (!split_ws(line).empty()) throw io_error("trailing content after last entry", lineno);
        }
        return ConstraintMatrix::from_triplets(static_cast<int>(n), static_cast<int>(d),
                                               std::move(entries));
    }

    if (size_tokens.size() != 2) throw io_error("size line needs 'rows cols'", lineno);
    const long long n = parse_int(size_tokens[0], lineno);
    const long long d = parse_int(size_tokens[1], lineno);
    if (n < 1 || d < 1) throw io_error("nonpositive dimensions", lineno);
    // Array format is column-major.
    std::vector<double> colmajor;
    colmajor.reserve(static_cast<std::size_t>(n * d));
    while (static_cast<long long>(colmajor.size()) < n * d) {
        if (!std::getline(in, line))
            throw io_error("unexpected end of file: " + std::to_string(colmajor.size()) + " of " +
                               std::to_string(n * d) + " values read", lineno);
        ++lineno;
        for (const auto& tok : split_ws(line)) {
            if (static_cast<long long>(colmajor.size()) >= n * d)
                throw io_error("trailing content after last value", lineno);
            colmajor.push_back(parse_double(tok, lineno));
        }
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (!split_ws(line).empty()) throw io_error("trailing content after last value", lineno);
    }
    std::vector<double> rowmajor(static_cast<std::size_t>(n * d));
    for (long long j = 0; j < d; ++j)
        for (long long i = 0; i < n; ++i)
            rowmajor[static_cast<std::size_t>(i * d + j)] = colmajor[static_cast<std::size_t>(j * n + i)];
    return ConstraintMatrix::from_dense(static_cast<int>(n), static_cast<int>(d), rowmajor);
}

void write_matrix_market(const std::string& path, const ConstraintMatrix& a,
                         const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing", 0);
    out << "%%MatrixMarket matrix coordinate real general\n";
    if (!comment.empty()) out << "% " << comment << "\n";
    out << a.rows() << " " << a.cols() << " " << a.nnz() << "\n";
    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    const auto& val = a.values();
    for (int i = 0; i < a.rows(); ++i)
        for (int p = ptr[i]; p < ptr[i + 1]; ++p)
            out << (i + 1) << " " << (col[static_cast<std::size_t>(p)] + 1) << " "
                << shortest_decimal(val[static_cast<std::size_t>(p)]) << "\n";
    if (!out) throw io_error("write failed for '" + path + "'", 0);
}

GeneratedInstance gen_random(int n, int d, double density, std::uint64_t seed) {
    if (n < 1 || d < 1 || n < d) throw std::invalid_argument("gen_random: need n >= d >= 1");
    if (!(density > 0.0) || density > 1.0)
        throw std::invalid_argument("gen_random: density must be in (0, 1]");
    const int per_row = std::max(1, static_cast<int>(std::llround(density * d)));
    for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
        RandomStream rng(child_seed(seed, attempt, rng_role::generator));
        std::vector<Triplet> entries;
        entries.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(per_row));
        std::vector<int> cols(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) cols[static_cast<std::size_t>(j)] = j;
        for (int i = 0; i < n; ++i) {
            // Partial Fisher-Yates picks per_row distinct columns.
            for (int t = 0; t < per_row; ++t) {
                const int swap_with =
                    t + static_cast<int>(rng.bounded(static_cast<std::uint32_t>(d - t)));
                std::swap(cols[static_cast<std::size_t>(t)], cols[static_cast<std::size_t>(swap_with)]);
                entries.push_back({i, cols[static_cast<std::size_t>(t)], rng.gaussian()});
            }
        }
        ConstraintMatrix m = ConstraintMatrix::from_triplets(n, d, std::move(entries));
        if (!full_column_rank(m)) continue;
        GeneratedInstance out{std::move(m),
                              "random n=" + std::to_string(n) + " d=" + std::to_string(d) +
                                  " density=" + shortest_decimal(density) +
                                  " seed=" + std::to_string(seed)};
        return out;
    }
    throw std::runtime_error("gen_random: rank-deficient instance after 16 attempts");
}

GeneratedInstance gen_banded(int n, int d, int bandwidth, std::uint64_t seed) {
    if (n < 1 || d < 1 || n < d) throw std::invalid_argument("gen_banded: need n >= d >= 1");
    if (bandwidth < 0) throw std::invalid_argument("gen_banded: bandwidth must be >= 0");
    const int window = std::min(bandwidth + 1, d);
    const int starts = d - window + 1;
    for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
        RandomStream rng(child_seed(seed, attempt, rng_role::generator));
        std::vector<Triplet> entries;
        entries.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(window));
        for (int i = 0; i < n; ++i) {
            const int s = i % starts;
            for (int t = 0; t < window; ++t) entries.push_back({i, s + t, rng.gaussian()});
        }
        ConstraintMatrix m = ConstraintMatrix::from_triplets(n, d, std::move(entries));
        if (!full_column_rank(m)) continue;
        GeneratedInstance out{std::move(m),
                              "banded n=" + std::to_string(n) + " d=" + std::to_string(d) +
                                  " bandwidth=" + std::to_string(bandwidth) +
                                  " seed=" + std::to_string(seed)};
        return out;
    }
    throw std::runtime_error("gen_banded: rank-deficient instance after 16 attempts");
}

GeneratedInstance gen_polygon2d(int n) {
    if (n < 2) throw std::invalid_argument("gen_polygon2d: need n >= 2");
    std::vector<Triplet> entries;
    entries.reserve(2 * static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double angle = static_cast<double>(k) * std::numbers::pi / static_cast<double>(n);
        entries.push_back({k, 0, std::cos(angle)});
        entries.push_back({k, 1, std::sin(angle)});
    }
    GeneratedInstance out{ConstraintMatrix::from_triplets(n, 2, std::move(entries)),
                          "polygon2d n=" + std::to_string(n)};
    return out;
}

CertificateDocument make_document(const ConstraintMatrix& a, const std::string& source,
                                  const EllipsoidCertificate& cert, const SolverConfig& config,
                                  const IterationTrace& trace) {
    CertificateDocument doc;
    doc.n = a.rows();
    doc.d = a.cols();
    doc.nnz = a.nnz();
    doc.source = source;
    doc.variant = cert.variant;
    doc.config = config;
    doc.seed = cert.seed;
    doc.iterations = cert.iterations;
    doc.sigma_max = cert.sigma_max;
    doc.weight_sum = cert.weight_sum;
    doc.epsilon = cert.epsilon;
    if (cert.variant == "treewidth") {
        const SparsityPattern pattern = gram_pattern(a);
        doc.tau_hat = symbolic_factorization(pattern, fill_reducing_order(pattern)).max_col_nnz;
    } else {
        doc.tau_hat = a.cols();
    }
    doc.weights.assign(cert.weights.data(), cert.weights.data() + cert.weights.size());
    doc.trace.reserve(trace.iterations.size());
    for (const IterationRecord& rec : trace.iterations) {
        doc.trace.push_back({rec.k, rec.weight_sum, rec.step_delta});
        doc.total_ms += rec.step_ms;
        doc.gram_ms += rec.gram_ms;
        doc.factor_ms += rec.factor_ms;
        doc.scores_ms += rec.scores_ms;
        doc.sample_ms += rec.sample_ms;
        doc.sketch_ms += rec.sketch_ms;
    }
    return doc;
}

nlohmann::ordered_json document_to_json(const CertificateDocument& doc) {
    nlohmann::ordered_json j;
    j["schema_version"] = doc.schema_version;
    j["instance"] = {{"n", doc.n}, {"d", doc.d}, {"nnz", doc.nnz}, {"source", doc.source}};
    nlohmann::ordered_json cfg;
    cfg["epsilon"] = doc.config.epsilon;
    cfg["delta"] = doc.config.delta;
    cfg["t_constant"] = doc.config.t_constant;
    cfg["s_constant"] = doc.config.s_constant;
    if (doc.config.epsilon0) cfg["epsilon0"] = *doc.config.epsilon0;
    else cfg["epsilon0"] = nullptr;
    cfg["sample_constant"] = doc.config.sample_constant;
    cfg["embed_constant"] = doc.config.embed_constant;
    cfg["jl_constant"] = doc.config.jl_constant;
    cfg["max_iterations"] = doc.config.max_iterations;
    cfg["convergence_tol"] = doc.config.convergence_tol;
    cfg["seed"] = doc.config.seed;
    cfg["use_sketch"] = doc.config.use_sketch;
    cfg["use_sampling"] = doc.config.use_sampling;
    cfg["sigma_eps"] = doc.config.sigma_eps;
    j["solve"] = {{"variant", doc.variant}, {"seed", doc.seed},       {"tau_hat", doc.tau_hat},
                  {"iterations", doc.iterations}, {"epsilon", doc.epsilon},
                  {"sigma_max", doc.sigma_max}, {"weight_sum", doc.weight_sum}, {"config", cfg}};
    j["weights"] = doc.weights;
    nlohmann::ordered_json tr = nlohmann::ordered_json::array();
    for (const auto& p : doc.trace)
        tr.push_back({{"k", p.k}, {"weight_sum", p.weight_sum}, {"step_delta", p.step_delta}});
    j["trace"] = std::move(tr);
    if (doc.has_timings)
        j["timings"] = {{"total_ms", doc.total_ms},   {"gram_ms", doc.gram_ms},
                        {"factor_ms", doc.factor_ms}, {"scores_ms", doc.scores_ms},
                        {"sample_ms", doc.sample_ms}, {"sketch_ms", doc.sketch_ms}};
    return j;
}

bool validate_document_json(const nlohmann::ordered_json& j, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (!j.is_object()) return fail("document is not an object");
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
        return fail("schema_version missing or not an integer");
    if (j["schema_version"].get<int>() != 1)
        return fail("unsupported schema_version " + j["schema_version"].dump());
    if (!j.contains("instance") || !j["instance"].is_object()) return fail("instance missing");
    const auto& inst = j["instance"];
    for (const char* key : {"n", "d", "nnz"})
        if (!inst.contains(key) || !inst[key].is_number_integer())
            return fail(std::string("instance.") + key + " missing or not an integer");
    if (!inst.contains("source") || !inst["source"].is_string())
        return fail("instance.source missing or not a string");
    const long long n = inst["n"].get<long long>();
    const long long d = inst["d"].get<long long>();
    if (n < 1 || d < 1 || n < d) return fail("instance dimensions need n >= d >= 1");

    if (!j.contains("solve") || !j["solve"].is_object()) return fail("solve missing");
    const auto& solve = j["solve"];
    if (!solve.contains("variant") || !solve["variant"].is_string())
        return fail("solve.variant missing or not a string");
    const std::string variant = solve["variant"].get<std::string>();
    if (variant != "exact" && variant != "sketch" && variant != "treewidth")
        return fail("solve.variant '" + variant + "' unknown");
    if (!solve.contains("seed") || !solve["seed"].is_number_unsigned())
        return fail("solve.seed missing or not unsigned");
    if (!solve.contains("tau_hat") || !solve["tau_hat"].is_number_integer() ||
        solve["tau_hat"].get<long long>() < 0)
        return fail("solve.tau_hat missing or negative");
    if (!solve.contains("iterations") || !solve["iterations"].is_number_integer() ||
        solve["iterations"].get<long long>() < 0)
        return fail("solve.iterations missing or negative");
    for (const char* key : {"epsilon", "sigma_max", "weight_sum"})
        if (!solve.contains(key) || !solve[key].is_number())
            return fail(std::string("solve.") + key + " missing or not a number");
    if (!solve.contains("config") || !solve["config"].is_object()) return fail("solve.config missing");
    const auto& cfg = solve["config"];
    for (const char* key : {"epsilon", "delta", "t_constant", "s_constant", "sample_constant",
                            "embed_constant", "jl_constant", "convergence_tol", "sigma_eps"})
        if (!cfg.contains(key) || !cfg[key].is_number())
            return fail(std::string("config.") + key + " missing or not a number");
    if (!cfg.contains("epsilon0") || !(cfg["epsilon0"].is_null() || cfg["epsilon0"].is_number()))
        return fail("config.epsilon0 must be null or a number");
    if (!cfg.contains("max_iterations") || !cfg["max_iterations"].is_number_integer())
        return fail("config.max_iterations missing or not an integer");
    if (!cfg.contains("seed") || !cfg["seed"].is_number_unsigned())
        return fail("config.seed missing or not unsigned");
    for (const char* key : {"use_sketch", "use_sampling"})
        if (!cfg.contains(key) || !cfg[key].is_boolean())
            return fail(std::string("config.") + key + " missing or not a boolean");

    if (!j.contains("weights") || !j["weights"].is_array()) return fail("weights missing");
    if (static_cast<long long>(j["weights"].size()) != n)
        return fail("weights length " + std::to_string(j["weights"].size()) + " != n " +
                    std::to_string(n));
    for (const auto& w : j["weights"]) {
        if (!w.is_number()) return fail("weights entries must be numbers");
        const double v = w.get<double>();
        if (!std::isfinite(v) || v < 0.0) return fail("weights entries must be finite and >= 0");
    }
    if (!j.contains("trace") || !j["trace"].is_array()) return fail("trace missing");
    for (const auto& p : j["trace"]) {
        if (!p.is_object()) return fail("trace entries must be objects");
        if (!p.contains("k") || !p["k"].is_number_integer()) return fail("trace.k missing");
        for (const char* key : {"weight_sum", "step_delta"})
            if (!p.contains(key) || !p[key].is_number())
                return fail(std::string("trace.") + key + " missing or not a number");
    }
    if (j.contains("timings")) {
        if (!j["timings"].is_object()) return fail("timings must be an object");
        for (const char* key :
             {"total_ms", "gram_ms", "factor_ms", "scores_ms", "sample_ms", "sketch_ms"})
            if (!j["timings"].contains(key) || !j["timings"][key].is_number())
                return fail(std::string("timings.") + key + " missing or not a number");
    }
    return true;
}

CertificateDocument document_from_json(const nlohmann::ordered_json& j) {
    std::string why;
    if (!validate_document_json(j, &why)) throw io_error("invalid document: " + why, 0);
    CertificateDocument doc;
    doc.schema_version = j["schema_version"].get<int>();
    const auto& inst = j["instance"];
    doc.n = inst["n"].get<int>();
    doc.d = inst["d"].get<int>();
    doc.nnz = inst["nnz"].get<std::int64_t>();
    doc.source = inst["source"].get<std::string>();
    const auto& solve = j["solve"];
    doc.variant = solve["variant"].get<std::string>();
    doc.seed = solve["seed"].get<std::uint64_t>();
    doc.tau_hat = solve["tau_hat"].get<int>();
    doc.iterations = solve["iterations"].get<long>();
    doc.epsilon = solve["epsilon"].get<double>();
    doc.sigma_max = solve["sigma_max"].get<double>();
    doc.weight_sum = solve["weight_sum"].get<double>();
    const auto& cfg = solve["config"];
    doc.config.epsilon = cfg["epsilon"].get<double>();
    doc.config.delta = cfg["delta"].get<double>();
    doc.config.t_constant = cfg["t_constant"].get<double>();
    doc.config.s_constant = cfg["s_constant"].get<double>();
    if (cfg["epsilon0"].is_null()) doc.config.epsilon0.reset();
    else doc.config.epsilon0 = cfg["epsilon0"].get<double>();
    doc.config.sample_constant = cfg["sample_constant"].get<double>();
    doc.config.embed_constant = cfg["embed_constant"].get<double>();
    doc.config.jl_constant = cfg["jl_constant"].get<double>();
    doc.config.max_iterations = cfg["max_iterations"].get<long>();
    doc.config.convergence_tol = cfg["convergence_tol"].get<double>();
    doc.config.seed = cfg["seed"].get<std::uint64_t>();
    doc.config.use_sketch = cfg["use_sketch"].get<bool>();
    doc.config.use_sampling = cfg["use_sampling"].get<bool>();
    doc.config.sigma_eps = cfg["sigma_eps"].get<double>();
    doc.weights = j["weights"].get<std::vector<double>>();
    for (const auto& p : j["trace"])
        doc.trace.push_back({p["k"].get<long>(), p["weight_sum"].get<double>(),
                             p["step_delta"].get<double>()});
    if (j.contains("timings")) {
        doc.has_timings = true;
        const auto& t = j["timings"];
        doc.total_ms = t["total_ms"].get<double>();
        doc.gram_ms = t["gram_ms"].get<double>();
        doc.factor_ms = t["factor_ms"].get<double>();
        doc.scores_ms = t["scores_ms"].get<double>();
        doc.sample_ms = t["sample_ms"].get<double>();
        doc.sketch_ms = t["sketch_ms"].get<double>();
    }
    return doc;
}

std::string render_document(const CertificateDocument& doc) {
    return document_to_json(doc).dump(2) + "\n";
}

CertificateDocument parse_document(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        long line = 1;
        const std::size_t stop = std::min(text.size(), e.byte);
        for (std::size_t i = 0; i < stop; ++i)
            if (text[i] == '\n') ++line;
        throw io_error(std::string("JSON parse failure: ") + e.what(), line);
    }
    return document_from_json(j);
}

EllipsoidCertificate certificate_from_document(const CertificateDocument& doc,
                                               const ConstraintMatrix& a) {
    if (doc.n != a.rows() || doc.d != a.cols())
        throw std::invalid_argument("certificate_from_document: document is for a " +
                                    std::to_string(doc.n) + " x " + std::to_string(doc.d) +
                                    " instance, matrix is " + std::to_string(a.rows()) + " x " +
                                    std::to_string(a.cols()));
    EllipsoidCertificate cert;
    cert.weights = to_eigen(doc.weights);
    cert.gram = gram(a, cert.weights);
    cert.epsilon = doc.epsilon;
    cert.sigma_max = doc.sigma_max;
    cert.weight_sum = doc.weight_sum;
    cert.iterations = doc.iterations;
    cert.variant = doc.variant;
    cert.seed = doc.seed;
    return cert;
}

}  // namespace johnell
