#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "irsai/csc_matrix.hpp"
#include "irsai/dense_ls.hpp"

namespace irsai {

enum class SaiStrategy { spai, psai, rsai };

std::string_view to_string(SaiStrategy s);
SaiStrategy parse_strategy(std::string_view name);

/// Parameters of the adaptive column-wise sparse approximate inverse.
struct SaiParams {
    SaiStrategy strategy = SaiStrategy::psai;
    /// Column residual target.
    double eta = 0.4;
    /// Maximum number of pattern-augmentation loops per column.
    int l_max = 10;
    /// SPAI: most profitable indices added per loop.
    int add_count = 5;
    /// RSAI: dominant residual indices taken per loop.
    int dominant_count = 3;
    /// Threshold dropping after each loop (PSAI/RSAI).
    bool drop_enabled = true;
    /// PSAI: maximum pre-drop pattern size; 0 means 10 * floor(nnz/n).
    Index pattern_cap = 0;
    /// Worker threads for the column loop; 0 means hardware concurrency.
    unsigned threads = 0;
    /// Keep a record of every dropped entry (diagnostics and tests).
    bool record_drops = false;

    /// The reference settings: SPAI l_max = 20 without dropping,
    /// PSAI/RSAI l_max = 10 with dropping.
    static SaiParams defaults(SaiStrategy s);
    /// Throws InputError on out-of-range values.
    void validate() const;
};

/// Read-only data shared by all column builds of one matrix.
class SaiContext {
public:
    SaiContext(const CscMatrix& a, SaiParams params);
    /// The context keeps a reference to its matrix.
    SaiContext(CscMatrix&&, SaiParams) = delete;

    const CscMatrix& a() const noexcept { return *a_; }
    /// Row access: column i of at() is row i of a().
    const CscMatrix& at() const noexcept { return at_; }
    const SaiParams& params() const noexcept { return params_; }
    double col_norm2(Index j) const { return col_norm2_[j]; }
    double a_one_norm() const noexcept { return one_norm_; }
    Index pattern_cap() const noexcept { return pattern_cap_; }

private:
    const CscMatrix* a_;
    CscMatrix at_;
    SaiParams params_;
    std::vector<double> col_norm2_;
    double one_norm_ = 0.0;
    Index pattern_cap_ = 0;
};

struct DropRecord {
    Index row;
    double value;
    double threshold;
};

/// Working state of one column m_k during its adaptive build.
struct ColumnState {
    Index k = 0;
    /// Pattern J, in factor column order.
    std::vector<Index> J;
    /// Nonzero rows of A(:, J), in factor row order.
    std::vector<Index> I;
    QrFactor factor;
    /// Reduced solution, aligned with J.
    std::vector<double> m_tilde;
    /// Residual A m_k - e_k, sparse, sorted by row.
    std::vector<Index> r_idx;
    std::vector<double> r_val;
    double r_norm = 1.0;
    /// RSAI: union of all dominant index sets used so far.
    std::vector<Index> history;
    /// PSAI: support of the current power vector |A|^l e_k, sorted.
    std::vector<Index> power_support;
    /// PSAI: every index that has ever entered J (dropped ones are not re-added).
    std::vector<Index> visited;
    int loops = 0;
    bool stagnated = false;
    bool capped = false;
    std::vector<DropRecord> drops;
    /// Lookups: row -> position in I, and membership of J.
    std::unordered_map<Index, Index> row_pos;
    std::unordered_set<Index> col_set;

    bool in_pattern(Index j) const;
    /// Entry (row, value) pairs of m_k sorted by row, exact zeros skipped.
    std::vector<std::pair<Index, double>> column_entries() const;
};

struct ScoredCandidate {
    Index j;
    /// r_k^T A e_j
    double proj;
    /// ||r_k + mu_j A e_j|| for the optimal mu_j
    double rho;
};

struct Preconditioner {
    CscMatrix m;
    std::vector<double> col_residuals;
    /// Columns with final residual norm > eta.
    Index n_c = 0;
    /// nnz(M) / nnz(A) for the matrix M approximates.
    double spar = 0.0;
    double build_seconds = 0.0;
    double eta = 0.0;
    Index capped_columns = 0;
    Index stagnated_columns = 0;
    /// Per column drop records when SaiParams::record_drops is set.
    std::vector<std::vector<DropRecord>> drops;
};

/// Column-wise F-norm minimizing sparse approximate inverse M ~ A^-1.
/// Columns are independent and built concurrently; results are merged by
/// column index, so the output does not depend on scheduling.
Preconditioner build_preconditioner(const CscMatrix& a, const SaiParams& params);

/// Builds one column to completion (all loops).
ColumnState build_column(const SaiContext& ctx, Index k);

ColumnState init_column(const SaiContext& ctx, Index k);

/// SPAI candidates J^ = N_k \ J with their one-dimensional residual scores,
/// sorted by column index.
std::vector<ScoredCandidate> spai_candidates(const SaiContext& ctx, const ColumnState& state);

/// Adds the add_count lowest-rho candidates (ties: smaller index) and re-solves.
void spai_select_and_augment(const SaiContext& ctx, ColumnState& state,
                             const std::vector<ScoredCandidate>& candidates, int add_count);

/// Advances the power support one step and adds its new indices. Returns
/// false when the pattern cap would be exceeded (nothing is added).
bool psai_expand(const SaiContext& ctx, ColumnState& state);

/// Up to `count` indices of largest |r_k(i)| outside the history (ties:
/// smaller index); they are appended to the history.
std::vector<Index> rsai_dominant(ColumnState& state, int count);

/// Adds every column index of the rows in `dominant` not yet in J.
void rsai_augment(const SaiContext& ctx, ColumnState& state, const std::vector<Index>& dominant);

/// Drops off-diagonal |m_jk| <= eta / (nnz(m_k) ||A||_1), re-solves, and
/// repeats until every surviving off-diagonal entry clears the threshold.
void apply_dropping(const SaiContext& ctx, ColumnState& state);

/// Adds columns to J (and their new rows to I), updating the factor
/// incrementally, then re-solves.
void augment_pattern(const SaiContext& ctx, ColumnState& state, std::vector<Index> new_cols);

} // namespace irsai
