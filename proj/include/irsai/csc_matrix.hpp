#pragma once

#include <span>
#include <vector>

#include "irsai/dense_matrix.hpp"

namespace irsai {

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Compressed sparse column matrix. Row indices are strictly increasing
/// within each column; instances are treated as immutable once built.
class CscMatrix {
public:
    CscMatrix() : col_ptr_(1, 0) {}

    /// Takes ownership of raw CSC arrays; throws InputError if they violate
    /// the storage invariants.
    CscMatrix(Index n_rows, Index n_cols, std::vector<Index> col_ptr,
              std::vector<Index> row_idx, std::vector<double> values);

    /// Builds from unordered triplets; duplicate coordinates are summed.
    /// Entries whose summed value is exactly zero are kept unless
    /// `drop_zeros` is set.
    static CscMatrix from_triplets(Index n_rows, Index n_cols, std::span<const Triplet> entries,
                                   bool drop_zeros = false);
    static CscMatrix identity(Index n);
    static CscMatrix diagonal(std::span<const double> d);
    /// Stores every entry of `a` that is not exactly zero.
    static CscMatrix from_dense(const DenseMatrix& a);

    Index n_rows() const noexcept { return n_rows_; }
    Index n_cols() const noexcept { return n_cols_; }
    Index nnz() const noexcept { return col_ptr_.back(); }
    bool is_square() const noexcept { return n_rows_ == n_cols_; }

    std::span<const Index> col_ptr() const noexcept { return col_ptr_; }
    std::span<const Index> row_idx() const noexcept { return row_idx_; }
    std::span<const double> values() const noexcept { return values_; }

    std::span<const Index> col_rows(Index j) const {
        return {row_idx_.data() + col_ptr_[j], static_cast<std::size_t>(col_ptr_[j + 1] - col_ptr_[j])};
    }
    std::span<const double> col_values(Index j) const {
        return {values_.data() + col_ptr_[j], static_cast<std::size_t>(col_ptr_[j + 1] - col_ptr_[j])};
    }
    Index col_nnz(Index j) const { return col_ptr_[j + 1] - col_ptr_[j]; }

    /// Stored value at (i, j), or 0 when absent.
    double at(Index i, Index j) const;
    bool contains(Index i, Index j) const;

    CscMatrix transpose() const;
    DenseMatrix to_dense() const;

    /// Structure and values identical, bit for bit.
    friend bool operator==(const CscMatrix&, const CscMatrix&) = default;

private:
    Index n_rows_ = 0;
    Index n_cols_ = 0;
    std::vector<Index> col_ptr_;
    std::vector<Index> row_idx_;
    std::vector<double> values_;
};

/// y = A x.
std::vector<double> spmv(const CscMatrix& a, std::span<const double> x);
/// y = A x into caller storage.
void spmv(const CscMatrix& a, std::span<const double> x, std::span<double> y);

/// Max column sum of absolute values.
double one_norm(const CscMatrix& a);

/// Dense copy of A(rows, cols); both index sets sorted ascending.
DenseMatrix extract_submatrix(const CscMatrix& a, std::span<const Index> rows,
                              std::span<const Index> cols);

} // namespace irsai
