#include "irsai/permutation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "irsai/error.hpp"

namespace irsai {

Permutation Permutation::identity(Index n) {
    Permutation p;
    p.perm.resize(static_cast<std::size_t>(n));
    std::iota(p.perm.begin(), p.perm.end(), 0);
    return p;
}

bool Permutation::is_identity() const {
    for (Index i = 0; i < size(); ++i)
        if (perm[i] != i) return false;
    return true;
}

bool Permutation::is_valid() const {
    std::vector<char> seen(perm.size(), 0);
    for (Index v : perm) {
        if (v < 0 || v >= size() || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

Permutation Permutation::inverse() const {
    Permutation inv;
    inv.perm.resize(perm.size());
    for (Index i = 0; i < size(); ++i) inv.perm[perm[i]] = i;
    return inv;
}

CscMatrix permute_rows(const CscMatrix& a, const Permutation& p) {
    if (p.size() != a.n_rows()) throw InputError("permute_rows: permutation size mismatch");
    if (!p.is_valid()) throw InputError("permute_rows: not a permutation");
    const Permutation inv = p.inverse();
    std::vector<Index> ptr(a.col_ptr().begin(), a.col_ptr().end());
    std::vector<Index> rows(static_cast<std::size_t>(a.nnz()));
    std::vector<double> vals(static_cast<std::size_t>(a.nnz()));
    std::vector<std::pair<Index, double>> col;
    for (Index j = 0; j < a.n_cols(); ++j) {
        const auto r = a.col_rows(j);
        const auto v = a.col_values(j);
        col.clear();
        for (std::size_t q = 0; q < r.size(); ++q) col.emplace_back(inv.perm[r[q]], v[q]);
        std::sort(col.begin(), col.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        for (std::size_t q = 0; q < col.size(); ++q) {
            rows[ptr[j] + q] = col[q].first;
            vals[ptr[j] + q] = col[q].second;
        }
    }
    return CscMatrix(a.n_rows(), a.n_cols(), std::move(ptr), std::move(rows), std::move(vals));
}

std::vector<double> permute_vector(std::span<const double> x, const Permutation& p) {
    if (static_cast<Index>(x.size()) != p.size()) throw InputError("permute_vector: size mismatch");
    std::vector<double> y(x.size());
    for (Index i = 0; i < p.size(); ++i) y[i] = x[p.perm[i]];
    return y;
}

bool has_zero_free_diagonal(const CscMatrix& a) {
    if (!a.is_square()) return false;
    for (Index j = 0; j < a.n_cols(); ++j)
        if (a.at(j, j) == 0.0) return false;
    return true;
}

namespace {

// One augmenting-path search from column k (iterative DFS). row_match[i] is
// the column matched to row i, or -1.
void augment(Index k, std::span<const Index> ptr, std::span<const Index> idx, std::vector<Index>& row_match,
             std::vector<Index>& cheap, std::vector<Index>& visited, std::vector<Index>& col_stack,
             std::vector<Index>& row_stack, std::vector<Index>& pos_stack) {
    bool found = false;
    Index i = -1;
    Index head = 0;
    col_stack[0] = k;
    while (head >= 0) {
        const Index j = col_stack[head];
        if (visited[j] != k) {
            visited[j] = k;
            Index p = cheap[j];
            for (; p < ptr[j + 1] && !found; ++p) {
                i = idx[p];
                found = (row_match[i] == -1);
            }
            cheap[j] = p;
            if (found) {
                row_stack[head] = i;
                break;
            }
            pos_stack[head] = ptr[j];
        }
        Index p = pos_stack[head];
        for (; p < ptr[j + 1]; ++p) {
            i = idx[p];
            if (visited[row_match[i]] == k) continue;
            pos_stack[head] = p + 1;
            row_stack[head] = i;
            col_stack[++head] = row_match[i];
            break;
        }
        if (p == ptr[j + 1]) --head;
    }
    if (found)
        for (Index h = head; h >= 0; --h) row_match[row_stack[h]] = col_stack[h];
}

} // namespace

ZeroFreeDiagonal zero_free_diagonal_permutation(const CscMatrix& a) {
    if (!a.is_square()) throw InputError("zero_free_diagonal_permutation: matrix must be square");
    const Index n = a.n_cols();
    if (has_zero_free_diagonal(a)) return {Permutation::identity(n), a};

    // pattern of numerically nonzero entries
    std::vector<Index> ptr(static_cast<std::size_t>(n) + 1, 0), idx;
    idx.reserve(static_cast<std::size_t>(a.nnz()));
    for (Index j = 0; j < n; ++j) {
        const auto r = a.col_rows(j);
        const auto v = a.col_values(j);
        for (std::size_t q = 0; q < r.size(); ++q)
            if (v[q] != 0.0) idx.push_back(r[q]);
        ptr[j + 1] = static_cast<Index>(idx.size());
    }

    std::vector<Index> row_match(static_cast<std::size_t>(n), -1);
    std::vector<Index> cheap(ptr.begin(), ptr.end() - 1);
    std::vector<Index> visited(static_cast<std::size_t>(n), -1);
    std::vector<Index> col_stack(static_cast<std::size_t>(n)), row_stack(static_cast<std::size_t>(n)),
        pos_stack(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k)
        augment(k, ptr, idx, row_match, cheap, visited, col_stack, row_stack, pos_stack);

    Permutation p;
    p.perm.assign(static_cast<std::size_t>(n), -1);
    for (Index i = 0; i < n; ++i)
        if (row_match[i] >= 0) p.perm[row_match[i]] = i;
    for (Index j = 0; j < n; ++j)
        if (p.perm[j] < 0)
            throw StructurallySingularError(
                "matrix is structurally singular: column " + std::to_string(j + 1) + " cannot be matched", j);

    CscMatrix permuted = permute_rows(a, p);
    return {std::move(p), std::move(permuted)};
}

} // namespace irsai
