#include "irsai/csc_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "irsai/error.hpp"

namespace irsai {

CscMatrix::CscMatrix(Index n_rows, Index n_cols, std::vector<Index> col_ptr,
                     std::vector<Index> row_idx, std::vector<double> values)
    : n_rows_(n_rows), n_cols_(n_cols), col_ptr_(std::move(col_ptr)),
      row_idx_(std::move(row_idx)), values_(std::move(values)) {
    if (n_rows_ < 0 || n_cols_ < 0) throw InputError("negative matrix dimension");
    if (col_ptr_.size() != static_cast<std::size_t>(n_cols_) + 1 || col_ptr_.front() != 0)
        throw InputError("col_ptr must have n_cols+1 entries starting at 0");
    if (static_cast<std::size_t>(col_ptr_.back()) != row_idx_.size() ||
        row_idx_.size() != values_.size())
        throw InputError("col_ptr[n_cols] must equal the number of stored entries");
    for (Index j = 0; j < n_cols_; ++j) {
        if (col_ptr_[j] > col_ptr_[j + 1]) throw InputError("col_ptr is not nondecreasing");
        for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
            const Index i = row_idx_[p];
            if (i < 0 || i >= n_rows_)
                throw InputError("row index out of range in column " + std::to_string(j));
            if (p > col_ptr_[j] && row_idx_[p - 1] >= i)
                throw InputError("row indices not strictly increasing in column " + std::to_string(j));
        }
    }
}

CscMatrix CscMatrix::from_triplets(Index n_rows, Index n_cols, std::span<const Triplet> entries,
                                   bool drop_zeros) {
    std::vector<Index> counts(static_cast<std::size_t>(n_cols) + 1, 0);
    for (const auto& t : entries) {
        if (t.row < 0 || t.row >= n_rows || t.col < 0 || t.col >= n_cols)
            throw InputError("triplet index out of range");
        ++counts[t.col + 1];
    }
    for (Index j = 0; j < n_cols; ++j) counts[j + 1] += counts[j];

    std::vector<Index> rows(entries.size());
    std::vector<double> vals(entries.size());
    std::vector<Index> next(counts.begin(), counts.end() - 1);
    for (const auto& t : entries) {
        const Index p = next[t.col]++;
        rows[p] = t.row;
        vals[p] = t.value;
    }

    std::vector<Index> col_ptr(static_cast<std::size_t>(n_cols) + 1, 0);
    std::vector<Index> out_rows;
    std::vector<double> out_vals;
    out_rows.reserve(entries.size());
    out_vals.reserve(entries.size());
    std::vector<Index> order;
    for (Index j = 0; j < n_cols; ++j) {
        order.resize(static_cast<std::size_t>(counts[j + 1] - counts[j]));
        for (std::size_t q = 0; q < order.size(); ++q) order[q] = counts[j] + static_cast<Index>(q);
        // stable: duplicates are summed in file order
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return rows[a] < rows[b]; });
        std::size_t q = 0;
        while (q < order.size()) {
            const Index r = rows[order[q]];
            double sum = 0.0;
            for (; q < order.size() && rows[order[q]] == r; ++q) sum += vals[order[q]];
            if (drop_zeros && sum == 0.0) continue;
            out_rows.push_back(r);
            out_vals.push_back(sum);
        }
        col_ptr[j + 1] = static_cast<Index>(out_rows.size());
    }
    return CscMatrix(n_rows, n_cols, std::move(col_ptr), std::move(out_rows), std::move(out_vals));
}

CscMatrix CscMatrix::identity(Index n) {
    std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
    return diagonal(ones);
}

CscMatrix CscMatrix::diagonal(std::span<const double> d) {
    const auto n = static_cast<Index>(d.size());
    std::vector<Index> ptr(d.size() + 1), rows(d.size());
    for (Index i = 0; i < n; ++i) {
        ptr[i + 1] = i + 1;
        rows[i] = i;
    }
    return CscMatrix(n, n, std::move(ptr), std::move(rows), std::vector<double>(d.begin(), d.end()));
}

CscMatrix CscMatrix::from_dense(const DenseMatrix& a) {
    std::vector<Index> ptr(static_cast<std::size_t>(a.cols()) + 1, 0), rows;
    std::vector<double> vals;
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            if (a(i, j) != 0.0) {
                rows.push_back(i);
                vals.push_back(a(i, j));
            }
        }
        ptr[j + 1] = static_cast<Index>(rows.size());
    }
    return CscMatrix(a.rows(), a.cols(), std::move(ptr), std::move(rows), std::move(vals));
}

double CscMatrix::at(Index i, Index j) const {
    const auto rows = col_rows(j);
    const auto it = std::lower_bound(rows.begin(), rows.end(), i);
    if (it == rows.end() || *it != i) return 0.0;
    return values_[col_ptr_[j] + (it - rows.begin())];
}

bool CscMatrix::contains(Index i, Index j) const {
    const auto rows = col_rows(j);
    return std::binary_search(rows.begin(), rows.end(), i);
}

CscMatrix CscMatrix::transpose() const {
    std::vector<Index> ptr(static_cast<std::size_t>(n_rows_) + 1, 0);
    for (Index i : row_idx_) ++ptr[i + 1];
    for (Index i = 0; i < n_rows_; ++i) ptr[i + 1] += ptr[i];
    std::vector<Index> rows(row_idx_.size());
    std::vector<double> vals(values_.size());
    std::vector<Index> next(ptr.begin(), ptr.end() - 1);
    // columns visited in order, so output rows come out sorted
    for (Index j = 0; j < n_cols_; ++j) {
        for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
            const Index q = next[row_idx_[p]]++;
            rows[q] = j;
            vals[q] = values_[p];
        }
    }
    return CscMatrix(n_cols_, n_rows_, std::move(ptr), std::move(rows), std::move(vals));
}

DenseMatrix CscMatrix::to_dense() const {
    DenseMatrix d(n_rows_, n_cols_);
    for (Index j = 0; j < n_cols_; ++j)
        for (Index p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) d(row_idx_[p], j) = values_[p];
    return d;
}

void spmv(const CscMatrix& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != static_cast<std::size_t>(a.n_cols()) || y.size() != static_cast<std::size_t>(a.n_rows()))
        throw InputError("spmv: dimension mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    const auto ptr = a.col_ptr();
    const auto rows = a.row_idx();
    const auto vals = a.values();
    for (Index j = 0; j < a.n_cols(); ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        for (Index p = ptr[j]; p < ptr[j + 1]; ++p) y[rows[p]] += vals[p] * xj;
    }
}

std::vector<double> spmv(const CscMatrix& a, std::span<const double> x) {
    std::vector<double> y(static_cast<std::size_t>(a.n_rows()));
    spmv(a, x, y);
    return y;
}

double one_norm(const CscMatrix& a) {
    double best = 0.0;
    for (Index j = 0; j < a.n_cols(); ++j) {
        double s = 0.0;
        for (double v : a.col_values(j)) s += std::fabs(v);
        best = std::max(best, s);
    }
    return best;
}

DenseMatrix extract_submatrix(const CscMatrix& a, std::span<const Index> rows,
                              std::span<const Index> cols) {
    for (Index r : rows)
        if (r < 0 || r >= a.n_rows()) throw InputError("extract_submatrix: row index out of range");
    DenseMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const Index j = cols[c];
        if (j < 0 || j >= a.n_cols()) throw InputError("extract_submatrix: column index out of range");
        const auto crow = a.col_rows(j);
        const auto cval = a.col_values(j);
        // merge two sorted lists
        std::size_t p = 0, q = 0;
        while (p < crow.size() && q < rows.size()) {
            if (crow[p] < rows[q]) {
                ++p;
            } else if (crow[p] > rows[q]) {
                ++q;
            } else {
                out(static_cast<Index>(q), static_cast<Index>(c)) = cval[p];
                ++p;
                ++q;
            }
        }
    }
    return out;
}

} // namespace irsai
