// Matrix Market I/O, instance generators, and JSON certificate documents.
#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "johnell/constraint_matrix.hpp"
#include "johnell/core.hpp"

namespace johnell {

class io_error : public std::runtime_error {
public:
    io_error(const std::string& what, long line) : std::runtime_error(what), line_number(line) {}
    long line_number;
};

// Coordinate or array format, real, general, 1-based indices; duplicate
// coordinate entries are summed. Parse failures throw io_error with the line.
ConstraintMatrix read_matrix_market(const std::string& path);

// Writes coordinate format (CSR order) with an optional "%" comment line.
// Values are shortest round-trip decimals, so equal inputs give equal bytes.
void write_matrix_market(const std::string& path, const ConstraintMatrix& a,
                         const std::string& comment);

struct GeneratedInstance {
    ConstraintMatrix matrix;
    std::string spec;  // human-readable generator spec, embedded as a comment
};

// Rows keep ~density * d Gaussian entries (at least one); regenerates with a
// child seed if the instance is column-rank deficient.
GeneratedInstance gen_random(int n, int d, double density, std::uint64_t seed);
// Each row is a dense Gaussian window of bandwidth+1 consecutive columns; the
// first rows cycle through all window starts so every column is covered.
GeneratedInstance gen_banded(int n, int d, int bandwidth, std::uint64_t seed);
// Unit normals at angles k*pi/n, k = 0..n-1.
GeneratedInstance gen_polygon2d(int n);

struct CertificateDocument {
    int schema_version = 1;
    // Instance descriptor
    int n = 0;
    int d = 0;
    std::int64_t nnz = 0;
    std::string source;  // input path or generator spec
    // Solve
    std::string variant;
    SolverConfig config;
    std::uint64_t seed = 0;
    // Max factor column count: d for the dense variants, the sparse factor's
    // tau_hat for the treewidth variant.
    int tau_hat = 0;
    long iterations = 0;
    double sigma_max = 0.0;
    double weight_sum = 0.0;
    double epsilon = 0.0;
    std::vector<double> weights;
    struct TracePoint {
        long k;
        double weight_sum;
        double step_delta;
    };
    std::vector<TracePoint> trace;
    // Optional wall times; excluded by default so identical runs give
    // byte-identical documents.
    bool has_timings = false;
    double total_ms = 0.0;
    double gram_ms = 0.0, factor_ms = 0.0, scores_ms = 0.0, sample_ms = 0.0, sketch_ms = 0.0;
};

CertificateDocument make_document(const ConstraintMatrix& a, const std::string& source,
                                  const EllipsoidCertificate& cert, const SolverConfig& config,
                                  const IterationTrace& trace);

nlohmann::ordered_json document_to_json(const CertificateDocument& doc);
CertificateDocument document_from_json(const nlohmann::ordered_json& j);
// Canonical bytes: two-space indent plus trailing newline.
std::string render_document(const CertificateDocument& doc);
CertificateDocument parse_document(const std::string& text);
// Structural schema check; fills why on failure.
bool validate_document_json(const nlohmann::ordered_json& j, std::string* why);

// Certificate reconstructed from a document (gram recomputed from weights).
EllipsoidCertificate certificate_from_document(const CertificateDocument& doc,
                                               const ConstraintMatrix& a);

}  // namespace johnell
