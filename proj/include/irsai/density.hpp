#pragma once

#include <optional>
#include <vector>

#include "irsai/csc_matrix.hpp"

namespace irsai {

/// Column/row nonzero statistics and the irregular (relatively dense) lines.
struct DensityProfile {
    Index n = 0;
    Index nnz = 0;
    /// floor(nnz / n), clamped to at least 1.
    Index p = 1;
    double factor = 10.0;
    std::vector<Index> col_nnz;
    std::vector<Index> row_nnz;
    /// Sorted indices with count > factor * p.
    std::vector<Index> dense_cols;
    std::vector<Index> dense_rows;
    /// Densest column of A.
    Index p_dc = 0;
    /// Densest irregular row after the dense columns are sparsified; filled
    /// in by split().
    std::optional<Index> p_dr;

    double threshold() const { return factor * static_cast<double>(p); }
    bool double_regular() const { return dense_cols.empty() && dense_rows.empty(); }
};

DensityProfile density_profile(const CscMatrix& a, double factor = 10.0);

} // namespace irsai
