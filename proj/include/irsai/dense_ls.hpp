#pragma once

#include <span>
#include <vector>

#include "irsai/dense_matrix.hpp"

namespace irsai {

/// Relative threshold on |R_ii| below which a column is numerically dependent.
inline constexpr double kRankTolerance = 1e-14;

/// Thin QR factorization B = Q R of a small dense m x k matrix, with Q kept
/// explicitly (m x k) and R upper triangular (k x k). The factored matrix is
/// retained so the factor can be rebuilt from scratch: after more than
/// 2 x (column count at the last full factorization) incremental updates, or
/// whenever an update would lose orthonormality of Q.
class QrFactor {
public:
    QrFactor() = default;
    explicit QrFactor(DenseMatrix b);

    Index rows() const noexcept { return b_.rows(); }
    Index cols() const noexcept { return b_.cols(); }
    const DenseMatrix& q() const noexcept { return q_; }
    const DenseMatrix& r() const noexcept { return r_; }
    const DenseMatrix& matrix() const noexcept { return b_; }

    bool rank_deficient() const;
    /// Columns whose |R_ii| falls below kRankTolerance * max |R_jj|.
    std::vector<Index> deficient_columns() const;
    Index refactorizations() const noexcept { return refactorizations_; }

    /// Factor of [B C].
    void append_columns(const DenseMatrix& c);
    /// Factor of [B; rows].
    void append_rows(const DenseMatrix& rows);

private:
    void refactor();
    void count_update();

    DenseMatrix b_;
    DenseMatrix q_;
    DenseMatrix r_;
    // Q has no zero columns (false when m < k or after a deficient append)
    bool orthonormal_ = true;
    Index base_cols_ = 0;
    Index updates_ = 0;
    Index refactorizations_ = 0;
};

QrFactor qr_factorize(const DenseMatrix& b);
QrFactor qr_append_columns(QrFactor f, const DenseMatrix& c);

struct RowAppendResult {
    QrFactor factor;
    std::vector<double> rhs;
};
/// Row-augmented factor plus the merged right-hand side [rhs_old; rhs_new].
RowAppendResult qr_append_rows(QrFactor f, const DenseMatrix& new_rows, std::span<const double> rhs_old,
                               std::span<const double> rhs_new);

struct LsSolution {
    std::vector<double> x;
    double residual_norm = 0.0;
    bool rank_deficient = false;
};

/// min ||B x - rhs||. Numerically dependent columns get x_i = 0.
LsSolution ls_solve(const QrFactor& f, std::span<const double> rhs);

/// Solves S X = RHS by LU with partial pivoting. Throws SingularMatrixError
/// when a pivot falls below 1e-14 * ||S||_1.
DenseMatrix small_dense_solve(const DenseMatrix& s, const DenseMatrix& rhs);

} // namespace irsai
