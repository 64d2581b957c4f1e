#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irsai/csc_matrix.hpp"
#include "irsai/density.hpp"
#include "irsai/sai.hpp"

namespace irsai {

struct SparseVector {
    std::vector<Index> idx;
    std::vector<double> val;

    double norm() const;
    double dot(std::span<const double> x) const;
    std::vector<double> to_dense(Index n) const;
};

/// A = A_hat + U1 V1^T + U2 V2^T, where V1 = (e_j1 .. e_js1) selects the
/// dense columns and U2 = (e_i1 .. e_is2) the dense rows. Every entry of A
/// lives in exactly one of the three terms.
struct IrregularSplit {
    Index n = 0;
    CscMatrix a_hat;
    std::vector<Index> dense_col_idx;
    std::vector<Index> dense_row_idx;
    /// Entries dropped from each dense column (indexed by row).
    std::vector<SparseVector> u1;
    /// Entries dropped from each dense row of the column-sparsified matrix
    /// (indexed by column).
    std::vector<SparseVector> v2;
    /// max_i ||V2(:, i)||_2, zero when there are no dense rows.
    double nu = 0.0;
    Index p = 1;
    /// Profile of A, with p_dr filled in.
    DensityProfile profile;

    Index s1() const noexcept { return static_cast<Index>(dense_col_idx.size()); }
    Index s2() const noexcept { return static_cast<Index>(dense_row_idx.size()); }
};

/// Sparsifies each dense column (then each dense row of the result) down to
/// its diagonal plus the p-1 entries nearest to it by index distance, ties
/// going to the smaller index. Throws InputError if a dense line lacks its
/// diagonal entry (permute to a zero-free diagonal first).
IrregularSplit split(const CscMatrix& a, const DensityProfile& profile);

/// A_hat + U1 V1^T + U2 V2^T assembled by relocating entries (no arithmetic).
CscMatrix reconstruct(const IrregularSplit& sp);

/// Per-subsystem stopping targets, all relative to ||b||. The constants in
/// the bound are replaced by the surrogates c0 = 1, c1 = c2 = nu.
struct ToleranceSet {
    double eps = 0.0;
    double tol_z = 0.0;
    std::optional<double> tol_p;
    std::optional<double> tol_q;
    double c0 = 1.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

ToleranceSet derive_tolerances(double eps, Index s1, Index s2, double nu);
ToleranceSet derive_tolerances(double eps, const IrregularSplit& sp);

struct RecoveryState {
    std::vector<double> z;
    /// n x s1, columns solve A_hat p = u_k.
    DenseMatrix P;
    /// n x s2, columns solve A_hat q = e_{i_k}.
    DenseMatrix Q;
    std::vector<double> y;
    DenseMatrix W;
    std::vector<double> x;
};

/// y = z - Q (I + V2^T Q)^-1 V2^T z, W = P - Q (I + V2^T Q)^-1 V2^T P,
/// x = y - W (I + V1^T W)^-1 V1^T y. Fills y, W, x and returns x. Throws
/// SingularMatrixError if either capacitance matrix is singular.
std::vector<double> recover_solution(RecoveryState& state, const IrregularSplit& sp);

/// The constants c0, c1, c2 of the stopping-criterion bound evaluated on the
/// computed z, P, Q (diagnostic only).
struct BoundConstants {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
};
/// Needs only z, P and Q of the state.
BoundConstants exact_bound_constants(const RecoveryState& state, const IrregularSplit& sp);

struct SolveOptions {
    SaiParams sai = SaiParams::defaults(SaiStrategy::psai);
    double eps = 1e-8;
    int max_iter = 1000;
    double factor = 10.0;
};

struct SolveReport {
    std::string pipeline;
    SaiStrategy strategy = SaiStrategy::psai;
    Index n = 0;
    Index nnz = 0;
    /// nnz of the matrix that was preconditioned (A_hat or A).
    Index nnz_precond = 0;
    Index s1 = 0;
    Index s2 = 0;
    double nu = 0.0;
    double spar = 0.0;
    Index n_c = 0;
    double ptime_seconds = 0.0;
    double stime_seconds = 0.0;
    double split_seconds = 0.0;
    /// BiCGStab iteration limit per system.
    int iter_limit = 0;
    /// Largest iteration count over all systems.
    int max_iter = 0;
    std::vector<int> per_system_iters;
    std::vector<double> per_system_rel_residuals;
    std::vector<double> per_system_targets;
    std::optional<std::string> breakdown;
    double eps = 0.0;
    double r_actual = 0.0;
    double a_ratio = 0.0;
    bool converged = false;
    std::optional<ToleranceSet> tolerances;
    std::optional<BoundConstants> exact_constants;
    Index capped_columns = 0;
    Index stagnated_columns = 0;
};

struct SolveOutcome {
    std::vector<double> x;
    SolveReport report;
};

/// Preconditions A itself and runs BiCGStab on A x = b to eps.
SolveOutcome solve_standard(const CscMatrix& a, std::span<const double> b, const SolveOptions& opts);

/// Splits A into a double regular A_hat plus two low-rank terms, builds one
/// preconditioner for A_hat, solves the s1 + s2 + 1 systems with A_hat, and
/// recovers x. With no dense lines this is exactly solve_standard.
SolveOutcome solve_irregular(const CscMatrix& a, std::span<const double> b, const SolveOptions& opts);

/// ||(A + U V^T)^-1 - [A^-1 - A^-1 U (I + V^T A^-1 U)^-1 V^T A^-1]||_F
///   / ||(A + U V^T)^-1||_F via dense inversion (n <= 64).
double smw_inverse_check(const DenseMatrix& a, const DenseMatrix& u, const DenseMatrix& v);

} // namespace irsai
