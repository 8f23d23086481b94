#include "johnell/treewidth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "solver_loop.hpp"

namespace johnell {

namespace {

// Row-major view of the factor pattern: for each row i, the columns j <= i
// with their column-storage slots, ascending in j (the diagonal comes last).
struct RowView {
    std::vector<int> ptr;   // size d+1
    std::vector<int> col;
    std::vector<int> slot;
};

RowView build_row_view(int d, const std::vector<int>& col_ptr, const std::vector<int>& col_rows) {
    RowView rv;
    rv.ptr.assign(static_cast<std::size_t>(d) + 1, 0);
    const std::size_t nnz = col_rows.size();
    for (int r : col_rows) ++rv.ptr[static_cast<std::size_t>(r) + 1];
    for (int i = 0; i < d; ++i) rv.ptr[static_cast<std::size_t>(i) + 1] += rv.ptr[static_cast<std::size_t>(i)];
    rv.col.resize(nnz);
    rv.slot.resize(nnz);
    std::vector<int> cursor(rv.ptr.begin(), rv.ptr.end() - 1);
    for (int j = 0; j < d; ++j)
        for (int p = col_ptr[static_cast<std::size_t>(j)]; p < col_ptr[static_cast<std::size_t>(j) + 1]; ++p) {
            const int i = col_rows[static_cast<std::size_t>(p)];
            const int at = cursor[static_cast<std::size_t>(i)]++;
            rv.col[static_cast<std::size_t>(at)] = j;
            rv.slot[static_cast<std::size_t>(at)] = p;
        }
    return rv;
}

// Slot of entry (row, col) in column storage, row >= col; -1 when absent.
int find_slot(const std::vector<int>& col_ptr, const std::vector<int>& col_rows, int col, int row) {
    const int lo = col_ptr[static_cast<std::size_t>(col)];
    const int hi = col_ptr[static_cast<std::size_t>(col) + 1];
    const auto* base = col_rows.data();
    const auto* it = std::lower_bound(base + lo, base + hi, row);
    if (it == base + hi || *it != row) return -1;
    return static_cast<int>(it - base);
}

// Up-looking factorization on the fixed pattern. gvalues holds the permuted
// weighted Gram aligned with the pattern slots (zero on fill slots). Returns
// the permuted index of the first nonpositive pivot, or -1 on success.
int factor_on_pattern(int d, const std::vector<int>& col_ptr, const std::vector<int>& col_rows,
                      const RowView& rv, const std::vector<double>& gvalues,
                      std::vector<double>& lvalues, std::vector<double>& work,
                      std::vector<int>& next) {
    lvalues.assign(gvalues.size(), 0.0);
    work.assign(static_cast<std::size_t>(d), 0.0);
    next.assign(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i) {
        const int rb = rv.ptr[static_cast<std::size_t>(i)];
        const int re = rv.ptr[static_cast<std::size_t>(i) + 1];
        for (int p = rb; p < re; ++p)
            work[static_cast<std::size_t>(rv.col[static_cast<std::size_t>(p)])] =
                gvalues[static_cast<std::size_t>(rv.slot[static_cast<std::size_t>(p)])];
        for (int p = rb; p < re - 1; ++p) {  // all columns j < i; the diagonal is last
            const int j = rv.col[static_cast<std::size_t>(p)];
            const int jb = col_ptr[static_cast<std::size_t>(j)];
            const double lij = work[static_cast<std::size_t>(j)] / lvalues[static_cast<std::size_t>(jb)];
            work[static_cast<std::size_t>(j)] = 0.0;
            const int slot = next[static_cast<std::size_t>(j)]++;
            lvalues[static_cast<std::size_t>(slot)] = lij;
            for (int q = jb + 1; q < slot; ++q)
                work[static_cast<std::size_t>(col_rows[static_cast<std::size_t>(q)])] -=
                    lij * lvalues[static_cast<std::size_t>(q)];
            work[static_cast<std::size_t>(i)] -= lij * lij;
        }
        const double piv = work[static_cast<std::size_t>(i)];
        work[static_cast<std::size_t>(i)] = 0.0;
        if (!(piv > 0.0) || !std::isfinite(piv)) return i;
        const int db = col_ptr[static_cast<std::size_t>(i)];
        lvalues[static_cast<std::size_t>(db)] = std::sqrt(piv);
        next[static_cast<std::size_t>(i)] = db + 1;
    }
    return -1;
}

// Per constraint row: the pattern slots and coefficients of its rank-one
// contribution to the permuted lower Gram, precomputed once per structure.
struct AssemblyCache {
    std::vector<int> ptr;  // size n+1
    std::vector<int> slot;
    std::vector<double> coeff;
};

AssemblyCache build_assembly_cache(const ConstraintMatrix& a, const EliminationOrder& order,
                                   const std::vector<int>& col_ptr,
                                   const std::vector<int>& col_rows) {
    const int n = a.rows();
    AssemblyCache cache;
    cache.ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int r = 0; r < n; ++r) {
        const int len = a.row_ptr()[r + 1] - a.row_ptr()[r];
        cache.ptr[static_cast<std::size_t>(r) + 1] =
            cache.ptr[static_cast<std::size_t>(r)] + len * (len + 1) / 2;
    }
    cache.slot.resize(static_cast<std::size_t>(cache.ptr[static_cast<std::size_t>(n)]));
    cache.coeff.resize(cache.slot.size());
    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    const auto& val = a.values();
    std::size_t at = 0;
    for (int r = 0; r < n; ++r) {
        for (int p = ptr[r]; p < ptr[r + 1]; ++p)
            for (int q = ptr[r]; q <= p; ++q) {
                const int pu = order.inv[static_cast<std::size_t>(col[static_cast<std::size_t>(p)])];
                const int qu = order.inv[static_cast<std::size_t>(col[static_cast<std::size_t>(q)])];
                const int row = std::max(pu, qu);
                const int c = std::min(pu, qu);
                const int slot = find_slot(col_ptr, col_rows, c, row);
                if (slot < 0)
                    throw std::logic_error("assembly: Gram entry off the symbolic pattern");
                cache.slot[at] = slot;
                cache.coeff[at] = val[static_cast<std::size_t>(p)] * val[static_cast<std::size_t>(q)];
                ++at;
            }
    }
    return cache;
}

void assemble(const AssemblyCache& cache, const Eigen::VectorXd& w, std::vector<double>& gvalues) {
    std::fill(gvalues.begin(), gvalues.end(), 0.0);
    const int n = static_cast<int>(w.size());
    for (int r = 0; r < n; ++r) {
        const double wr = w[r];
        if (wr == 0.0) continue;
        for (int t = cache.ptr[static_cast<std::size_t>(r)]; t < cache.ptr[static_cast<std::size_t>(r) + 1]; ++t)
            gvalues[static_cast<std::size_t>(cache.slot[static_cast<std::size_t>(t)])] +=
                wr * cache.coeff[static_cast<std::size_t>(t)];
    }
}

}  // namespace

SparsityPattern gram_pattern(const ConstraintMatrix& a) {
    const int n = a.rows();
    const int d = a.cols();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(d));
    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    for (int r = 0; r < n; ++r)
        for (int p = ptr[r]; p < ptr[r + 1]; ++p)
            for (int q = ptr[r]; q < p; ++q) {
                const int u = col[static_cast<std::size_t>(p)];
                const int v = col[static_cast<std::size_t>(q)];
                adj[static_cast<std::size_t>(u)].push_back(v);
                adj[static_cast<std::size_t>(v)].push_back(u);
            }
    SparsityPattern pat;
    pat.d = d;
    pat.ptr.assign(static_cast<std::size_t>(d) + 1, 0);
    for (int j = 0; j < d; ++j) {
        auto& list = adj[static_cast<std::size_t>(j)];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        pat.ptr[static_cast<std::size_t>(j) + 1] =
            pat.ptr[static_cast<std::size_t>(j)] + static_cast<int>(list.size());
    }
    pat.idx.reserve(static_cast<std::size_t>(pat.ptr[static_cast<std::size_t>(d)]));
    for (int j = 0; j < d; ++j)
        pat.idx.insert(pat.idx.end(), adj[static_cast<std::size_t>(j)].begin(),
                       adj[static_cast<std::size_t>(j)].end());
    return pat;
}

EliminationOrder natural_order(int d) {
    EliminationOrder order;
    order.perm.resize(static_cast<std::size_t>(d));
    order.inv.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) order.perm[static_cast<std::size_t>(i)] = order.inv[static_cast<std::size_t>(i)] = i;
    return order;
}

EliminationOrder order_from_permutation(std::vector<int> perm) {
    const int d = static_cast<int>(perm.size());
    EliminationOrder order;
    order.inv.assign(static_cast<std::size_t>(d), -1);
    for (int k = 0; k < d; ++k) {
        const int v = perm[static_cast<std::size_t>(k)];
        if (v < 0 || v >= d || order.inv[static_cast<std::size_t>(v)] != -1)
            throw std::invalid_argument("order_from_permutation: not a permutation of [0, " +
                                        std::to_string(d) + ")");
        order.inv[static_cast<std::size_t>(v)] = k;
    }
    order.perm = std::move(perm);
    return order;
}

EliminationOrder fill_reducing_order(const SparsityPattern& pattern) {
    const int d = pattern.d;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
        adj[static_cast<std::size_t>(j)].assign(
            pattern.idx.begin() + pattern.ptr[static_cast<std::size_t>(j)],
            pattern.idx.begin() + pattern.ptr[static_cast<std::size_t>(j) + 1]);
    std::vector<char> done(static_cast<std::size_t>(d), 0);
    std::vector<int> degree(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) degree[static_cast<std::size_t>(j)] = static_cast<int>(adj[static_cast<std::size_t>(j)].size());
    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(d));
    std::vector<int> live, merged;
    for (int step = 0; step < d; ++step) {
        int v = -1;
        for (int j = 0; j < d; ++j)
            if (!done[static_cast<std::size_t>(j)] &&
                (v == -1 || degree[static_cast<std::size_t>(j)] < degree[static_cast<std::size_t>(v)]))
                v = j;
        perm.push_back(v);
        done[static_cast<std::size_t>(v)] = 1;
        live.clear();
        for (int u : adj[static_cast<std::size_t>(v)])
            if (!done[static_cast<std::size_t>(u)]) live.push_back(u);
        // Eliminating v turns its live neighborhood into a clique.
        for (int u : live) {
            auto& au = adj[static_cast<std::size_t>(u)];
            merged.clear();
            std::size_t x = 0, y = 0;
            while (x < au.size() || y < live.size()) {
                int cand;
                if (x == au.size()) cand = live[y++];
                else if (y == live.size()) cand = au[x++];
                else if (au[x] < live[y]) cand = au[x++];
                else if (au[x] > live[y]) cand = live[y++];
                else { cand = au[x]; ++x; ++y; }
                if (cand != u && !done[static_cast<std::size_t>(cand)]) merged.push_back(cand);
            }
            au = merged;
            degree[static_cast<std::size_t>(u)] = static_cast<int>(au.size());
        }
    }
    return order_from_permutation(std::move(perm));
}

EliminationTree symbolic_factorization(const SparsityPattern& pattern, const EliminationOrder& order) {
    const int d = pattern.d;
    if (static_cast<int>(order.perm.size()) != d)
        throw std::invalid_argument("symbolic_factorization: order size mismatch");
    // Lower pattern of the permuted Gram, by row, ascending.
    std::vector<std::vector<int>> below(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        const int pj = order.inv[static_cast<std::size_t>(j)];
        for (int p = pattern.ptr[static_cast<std::size_t>(j)]; p < pattern.ptr[static_cast<std::size_t>(j) + 1]; ++p) {
            const int pk = order.inv[static_cast<std::size_t>(pattern.idx[static_cast<std::size_t>(p)])];
            if (pk < pj) below[static_cast<std::size_t>(pj)].push_back(pk);
        }
    }
    for (auto& row : below) std::sort(row.begin(), row.end());

    EliminationTree tree;
    tree.d = d;
    tree.parent.assign(static_cast<std::size_t>(d), -1);
    std::vector<int> ancestor(static_cast<std::size_t>(d), -1);
    for (int i = 0; i < d; ++i)
        for (int k : below[static_cast<std::size_t>(i)]) {
            int j = k;
            while (ancestor[static_cast<std::size_t>(j)] != -1 && ancestor[static_cast<std::size_t>(j)] != i) {
                const int up = ancestor[static_cast<std::size_t>(j)];
                ancestor[static_cast<std::size_t>(j)] = i;  // path compression
                j = up;
            }
            if (ancestor[static_cast<std::size_t>(j)] == -1) {
                ancestor[static_cast<std::size_t>(j)] = i;
                tree.parent[static_cast<std::size_t>(j)] = i;
            }
        }

    // Column patterns: row i reaches column j iff j lies on an etree path
    // from a row entry of i up toward i.
    std::vector<std::vector<int>> cols(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) cols[static_cast<std::size_t>(j)].push_back(j);
    std::vector<int> mark(static_cast<std::size_t>(d), -1);
    for (int i = 0; i < d; ++i) {
        mark[static_cast<std::size_t>(i)] = i;
        for (int k : below[static_cast<std::size_t>(i)]) {
            int j = k;
            while (mark[static_cast<std::size_t>(j)] != i) {
                mark[static_cast<std::size_t>(j)] = i;
                cols[static_cast<std::size_t>(j)].push_back(i);
                j = tree.parent[static_cast<std::size_t>(j)];
            }
        }
    }
    tree.col_ptr.assign(static_cast<std::size_t>(d) + 1, 0);
    for (int j = 0; j < d; ++j) {
        const int len = static_cast<int>(cols[static_cast<std::size_t>(j)].size());
        tree.col_ptr[static_cast<std::size_t>(j) + 1] = tree.col_ptr[static_cast<std::size_t>(j)] + len;
        tree.max_col_nnz = std::max(tree.max_col_nnz, len);
    }
    tree.col_rows.reserve(static_cast<std::size_t>(tree.col_ptr[static_cast<std::size_t>(d)]));
    for (int j = 0; j < d; ++j)
        tree.col_rows.insert(tree.col_rows.end(), cols[static_cast<std::size_t>(j)].begin(),
                             cols[static_cast<std::size_t>(j)].end());
    return tree;
}

Eigen::MatrixXd SparseCholeskyFactor::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j)
        for (int p = col_ptr[static_cast<std::size_t>(j)]; p < col_ptr[static_cast<std::size_t>(j) + 1]; ++p)
            m(row_idx[static_cast<std::size_t>(p)], j) = values[static_cast<std::size_t>(p)];
    return m;
}

SparseCholeskyFactor numeric_cholesky(const ConstraintMatrix& a, const Eigen::VectorXd& w,
                                      const EliminationOrder& order, const EliminationTree& tree) {
    const int d = a.cols();
    if (tree.d != d || static_cast<int>(order.perm.size()) != d)
        throw std::invalid_argument("numeric_cholesky: dimension mismatch");
    if (w.size() != a.rows()) throw std::invalid_argument("numeric_cholesky: weight length mismatch");
    AssemblyCache cache = build_assembly_cache(a, order, tree.col_ptr, tree.col_rows);
    std::vector<double> gvalues(tree.col_rows.size());
    assemble(cache, w, gvalues);
    RowView rv = build_row_view(d, tree.col_ptr, tree.col_rows);
    SparseCholeskyFactor f;
    f.d = d;
    f.col_ptr = tree.col_ptr;
    f.row_idx = tree.col_rows;
    f.max_col_nnz = tree.max_col_nnz;
    std::vector<double> work;
    std::vector<int> next;
    const int bad = factor_on_pattern(d, f.col_ptr, f.row_idx, rv, gvalues, f.values, work, next);
    if (bad >= 0) {
        const int original = order.perm[static_cast<std::size_t>(bad)];
        throw factorization_error("numeric_cholesky: weighted Gram is not positive definite (pivot column " +
                                      std::to_string(original) + ")",
                                  original);
    }
    return f;
}

Eigen::VectorXd row_scores_via_cholesky(const SparseCholeskyFactor& factor,
                                        const EliminationOrder& order, const ConstraintMatrix& a,
                                        const Eigen::VectorXd* weights) {
    const int n = a.rows();
    const int d = a.cols();
    if (factor.d != d || static_cast<int>(order.perm.size()) != d)
        throw std::invalid_argument("row_scores_via_cholesky: dimension mismatch");
    if (weights && weights->size() != n)
        throw std::invalid_argument("row_scores_via_cholesky: weight length mismatch");
    // parent in the elimination tree is the first subdiagonal row of a column.
    std::vector<int> parent(static_cast<std::size_t>(d), -1);
    for (int j = 0; j < d; ++j)
        if (factor.col_ptr[static_cast<std::size_t>(j) + 1] - factor.col_ptr[static_cast<std::size_t>(j)] > 1)
            parent[static_cast<std::size_t>(j)] =
                factor.row_idx[static_cast<std::size_t>(factor.col_ptr[static_cast<std::size_t>(j)]) + 1];

    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    const auto& val = a.values();
    Eigen::VectorXd out(n);
    std::vector<double> work(static_cast<std::size_t>(d), 0.0);
    std::vector<char> seen(static_cast<std::size_t>(d), 0);
    std::vector<int> nodes;
    for (int r = 0; r < n; ++r) {
        nodes.clear();
        for (int p = ptr[r]; p < ptr[r + 1]; ++p) {
            int j = order.inv[static_cast<std::size_t>(col[static_cast<std::size_t>(p)])];
            work[static_cast<std::size_t>(j)] = val[static_cast<std::size_t>(p)];
            // Union of tree paths from the support to the root.
            while (j != -1 && !seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = 1;
                nodes.push_back(j);
                j = parent[static_cast<std::size_t>(j)];
            }
        }
        std::sort(nodes.begin(), nodes.end());
        double sumsq = 0.0;
        for (int j : nodes) {
            const int jb = factor.col_ptr[static_cast<std::size_t>(j)];
            const int je = factor.col_ptr[static_cast<std::size_t>(j) + 1];
            const double zj = work[static_cast<std::size_t>(j)] / factor.values[static_cast<std::size_t>(jb)];
            sumsq += zj * zj;
            work[static_cast<std::size_t>(j)] = 0.0;
            seen[static_cast<std::size_t>(j)] = 0;
            for (int p = jb + 1; p < je; ++p)
                work[static_cast<std::size_t>(factor.row_idx[static_cast<std::size_t>(p)])] -=
                    zj * factor.values[static_cast<std::size_t>(p)];
        }
        out[r] = weights ? (*weights)[r] * sumsq : sumsq;
    }
    return out;
}

std::vector<double> inverse_on_factor_pattern(const SparseCholeskyFactor& factor) {
    const int d = factor.d;
    std::vector<double> z(factor.values.size(), 0.0);
    auto lookup = [&](int row, int colv) -> double {
        if (row == colv) return z[static_cast<std::size_t>(factor.col_ptr[static_cast<std::size_t>(colv)])];
        const int slot = find_slot(factor.col_ptr, factor.row_idx, colv, row);
        if (slot < 0)
            throw std::logic_error("inverse_on_factor_pattern: entry off the factor pattern");
        return z[static_cast<std::size_t>(slot)];
    };
    for (int j = d - 1; j >= 0; --j) {
        const int jb = factor.col_ptr[static_cast<std::size_t>(j)];
        const int je = factor.col_ptr[static_cast<std::size_t>(j) + 1];
        const double diag = factor.values[static_cast<std::size_t>(jb)];
        const double dj = diag * diag;
        for (int p = je - 1; p > jb; --p) {
            const int i = factor.row_idx[static_cast<std::size_t>(p)];
            double s = 0.0;
            for (int t = jb + 1; t < je; ++t) {
                const int k = factor.row_idx[static_cast<std::size_t>(t)];
                const double lhat = factor.values[static_cast<std::size_t>(t)] / diag;
                s += lhat * lookup(std::max(k, i), std::min(k, i));
            }
            z[static_cast<std::size_t>(p)] = -s;
        }
        double s = 0.0;
        for (int t = jb + 1; t < je; ++t)
            s += (factor.values[static_cast<std::size_t>(t)] / diag) * z[static_cast<std::size_t>(t)];
        z[static_cast<std::size_t>(jb)] = 1.0 / dj - s;
    }
    return z;
}

Eigen::VectorXd row_scores_via_pattern_inverse(const SparseCholeskyFactor& factor,
                                               const std::vector<double>& inverse_values,
                                               const EliminationOrder& order,
                                               const ConstraintMatrix& a,
                                               const Eigen::VectorXd* weights) {
    const int n = a.rows();
    const int d = a.cols();
    if (factor.d != d || static_cast<int>(order.perm.size()) != d)
        throw std::invalid_argument("row_scores_via_pattern_inverse: dimension mismatch");
    if (inverse_values.size() != factor.values.size())
        throw std::invalid_argument("row_scores_via_pattern_inverse: inverse length mismatch");
    if (weights && weights->size() != n)
        throw std::invalid_argument("row_scores_via_pattern_inverse: weight length mismatch");
    const auto& ptr = a.row_ptr();
    const auto& col = a.col_idx();
    const auto& val = a.values();
    Eigen::VectorXd out(n);
    for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int p = ptr[r]; p < ptr[r + 1]; ++p) {
            const int pu = order.inv[static_cast<std::size_t>(col[static_cast<std::size_t>(p)])];
            const double vp = val[static_cast<std::size_t>(p)];
            acc += vp * vp * inverse_values[static_cast<std::size_t>(
                                 factor.col_ptr[static_cast<std::size_t>(pu)])];
            for (int q = ptr[r]; q < p; ++q) {
                const int qu = order.inv[static_cast<std::size_t>(col[static_cast<std::size_t>(q)])];
                const int slot = find_slot(factor.col_ptr, factor.row_idx, std::min(pu, qu),
                                           std::max(pu, qu));
                if (slot < 0)
                    throw std::invalid_argument(
                        "row_scores_via_pattern_inverse: support pair of row " + std::to_string(r) +
                        " off the factor pattern");
                acc += 2.0 * vp * val[static_cast<std::size_t>(q)] *
                       inverse_values[static_cast<std::size_t>(slot)];
            }
        }
        out[r] = weights ? (*weights)[r] * acc : acc;
    }
    return out;
}

EllipsoidCertificate treewidth_solve(const ConstraintMatrix& a, const SolverConfig& config,
                                     const EliminationOrder* user_order, IterationTrace* trace) {
    const int n = a.rows();
    const int d = a.cols();
    config.validate(n, d);
    if (user_order && static_cast<int>(user_order->perm.size()) != d)
        throw std::invalid_argument("treewidth_solve: order size mismatch");
    const SparsityPattern pattern = gram_pattern(a);
    const EliminationOrder order = user_order ? *user_order : fill_reducing_order(pattern);
    const EliminationTree tree = symbolic_factorization(pattern, order);
    const AssemblyCache cache = build_assembly_cache(a, order, tree.col_ptr, tree.col_rows);
    const RowView rv = build_row_view(d, tree.col_ptr, tree.col_rows);

    SparseCholeskyFactor f;
    f.d = d;
    f.col_ptr = tree.col_ptr;
    f.row_idx = tree.col_rows;
    f.max_col_nnz = tree.max_col_nnz;
    std::vector<double> gvalues(tree.col_rows.size());
    std::vector<double> work;
    std::vector<int> next;

    auto refactor = [&](const Eigen::VectorXd& w) {
        assemble(cache, w, gvalues);
        const int bad = factor_on_pattern(d, f.col_ptr, f.row_idx, rv, gvalues, f.values, work, next);
        if (bad >= 0) {
            const int original = order.perm[static_cast<std::size_t>(bad)];
            throw factorization_error(
                "treewidth_solve: weighted Gram is not positive definite (pivot column " +
                    std::to_string(original) + ")",
                original);
        }
    };

    const long t_budget = config.iteration_budget(n, d);
    auto step = [&](const Eigen::VectorXd& w, long, IterationRecord& rec) {
        using clock = std::chrono::steady_clock;
        auto t0 = clock::now();
        refactor(w);
        rec.factor_ms = detail::ms_since(t0);
        t0 = clock::now();
        const std::vector<double> zvals = inverse_on_factor_pattern(f);
        Eigen::VectorXd nextw = row_scores_via_pattern_inverse(f, zvals, order, a, &w);
        rec.scores_ms = detail::ms_since(t0);
        // Keep strict positivity so no row ever drops out of the Gram.
        for (Eigen::Index i = 0; i < nextw.size(); ++i)
            if (nextw[i] < 1e-300) {
                nextw[i] = 1e-300;
                ++rec.clamped;
            }
        return nextw;
    };

    detail::LoopResult loop =
        detail::averaged_fixed_point(n, d, t_budget, config.convergence_tol, trace, step);
    const Eigen::VectorXd& u = loop.averaged;
    if (trace) trace->normalized = u;

    refactor(u);
    const std::vector<double> zvals = inverse_on_factor_pattern(f);
    const Eigen::VectorXd sig = row_scores_via_pattern_inverse(f, zvals, order, a, nullptr);

    EllipsoidCertificate cert;
    cert.weights = u;
    cert.gram = gram(a, u);
    cert.epsilon = config.epsilon;
    cert.sigma_max = sig.maxCoeff();
    cert.weight_sum = u.sum();
    cert.iterations = loop.steps;
    cert.variant = "treewidth";
    cert.seed = config.seed;
    if (cert.sigma_max > (1.0 + config.epsilon) + 1e-9)
        throw solver_error("treewidth_solve: sigma bound " + std::to_string(1.0 + config.epsilon) +
                               " not met (max " + std::to_string(cert.sigma_max) + ")",
                           u, cert.sigma_max);
    return cert;
}

}  // namespace johnell
