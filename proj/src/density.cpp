#include "irsai/density.hpp"

#include <algorithm>

#include "irsai/error.hpp"

namespace irsai {

DensityProfile density_profile(const CscMatrix& a, double factor) {
    if (!a.is_square()) throw InputError("density_profile: matrix must be square");
    if (!(factor > 0.0)) throw InputError("density_profile: factor must be positive");
    DensityProfile prof;
    prof.n = a.n_cols();
    prof.nnz = a.nnz();
    prof.factor = factor;
    prof.p = prof.n > 0 ? std::max<Index>(1, prof.nnz / prof.n) : 1;
    prof.col_nnz.resize(static_cast<std::size_t>(prof.n));
    prof.row_nnz.assign(static_cast<std::size_t>(prof.n), 0);
    for (Index j = 0; j < prof.n; ++j) prof.col_nnz[j] = a.col_nnz(j);
    for (Index i : a.row_idx()) ++prof.row_nnz[i];

    const double limit = prof.threshold();
    for (Index j = 0; j < prof.n; ++j) {
        if (prof.col_nnz[j] > limit) prof.dense_cols.push_back(j);
        if (prof.row_nnz[j] > limit) prof.dense_rows.push_back(j);
    }
    if (prof.n > 0) prof.p_dc = *std::max_element(prof.col_nnz.begin(), prof.col_nnz.end());
    return prof;
}

} // namespace irsai
