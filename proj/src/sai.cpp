#include "irsai/sai.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "irsai/error.hpp"

namespace irsai {

std::string_view to_string(SaiStrategy s) {
    switch (s) {
    case SaiStrategy::spai: return "spai";
    case SaiStrategy::psai: return "psai";
    case SaiStrategy::rsai: return "rsai";
    }
    return "?";
}

SaiStrategy parse_strategy(std::string_view name) {
    if (name == "spai" || name == "SPAI") return SaiStrategy::spai;
    if (name == "psai" || name == "PSAI") return SaiStrategy::psai;
    if (name == "rsai" || name == "RSAI") return SaiStrategy::rsai;
    throw InputError("unknown strategy '" + std::string(name) + "'");
}

SaiParams SaiParams::defaults(SaiStrategy s) {
    SaiParams p;
    p.strategy = s;
    p.eta = 0.4;
    p.l_max = s == SaiStrategy::spai ? 20 : 10;
    p.drop_enabled = s != SaiStrategy::spai;
    return p;
}

void SaiParams::validate() const {
    if (!(eta > 0.0 && eta < 1.0)) throw InputError("eta must lie in (0, 1)");
    if (l_max < 1) throw InputError("l_max must be at least 1");
    if (add_count < 1) throw InputError("add_count must be at least 1");
    if (dominant_count < 1) throw InputError("dominant_count must be at least 1");
    if (pattern_cap < 0) throw InputError("pattern_cap must be nonnegative");
}

SaiContext::SaiContext(const CscMatrix& a, SaiParams params)
    : a_(&a), at_(a.transpose()), params_(params) {
    params_.validate();
    if (!a.is_square()) throw InputError("sparse approximate inverse needs a square matrix");
    col_norm2_.resize(static_cast<std::size_t>(a.n_cols()));
    for (Index j = 0; j < a.n_cols(); ++j) {
        double s = 0.0;
        for (double v : a.col_values(j)) s += v * v;
        col_norm2_[j] = s;
    }
    one_norm_ = one_norm(a);
    const Index n = a.n_cols();
    const Index p = n > 0 ? std::max<Index>(1, a.nnz() / n) : 1;
    pattern_cap_ = params_.pattern_cap > 0 ? params_.pattern_cap : 10 * p;
}

bool ColumnState::in_pattern(Index j) const { return col_set.contains(j); }

std::vector<std::pair<Index, double>> ColumnState::column_entries() const {
    std::vector<std::pair<Index, double>> out;
    out.reserve(J.size());
    for (std::size_t q = 0; q < J.size(); ++q)
        if (m_tilde[q] != 0.0) out.emplace_back(J[q], m_tilde[q]);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

void resolve(ColumnState& st) {
    const auto m = static_cast<Index>(st.I.size());
    std::vector<double> rhs(static_cast<std::size_t>(m), 0.0);
    const auto kpos = st.row_pos.find(st.k);
    if (kpos != st.row_pos.end()) rhs[kpos->second] = 1.0;

    auto sol = ls_solve(st.factor, rhs);
    st.m_tilde = std::move(sol.x);

    std::vector<double> res(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) res[i] = -rhs[i];
    const auto& b = st.factor.matrix();
    for (std::size_t j = 0; j < st.m_tilde.size(); ++j) {
        const double x = st.m_tilde[j];
        if (x == 0.0) continue;
        const auto bj = b.col(static_cast<Index>(j));
        for (Index i = 0; i < m; ++i) res[i] += bj[i] * x;
    }
    std::vector<std::pair<Index, double>> r;
    r.reserve(res.size() + 1);
    for (Index i = 0; i < m; ++i)
        if (res[i] != 0.0) r.emplace_back(st.I[i], res[i]);
    if (kpos == st.row_pos.end()) r.emplace_back(st.k, -1.0);
    std::sort(r.begin(), r.end());
    st.r_idx.resize(r.size());
    st.r_val.resize(r.size());
    for (std::size_t q = 0; q < r.size(); ++q) {
        st.r_idx[q] = r[q].first;
        st.r_val[q] = r[q].second;
    }
    st.r_norm = norm2(st.r_val);
}

// Refactorizes from scratch over a (sorted) pattern.
void rebuild(const SaiContext& ctx, ColumnState& st, std::vector<Index> cols) {
    std::sort(cols.begin(), cols.end());
    std::vector<Index> rows;
    for (Index j : cols) {
        const auto cr = ctx.a().col_rows(j);
        rows.insert(rows.end(), cr.begin(), cr.end());
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

    st.factor = qr_factorize(extract_submatrix(ctx.a(), rows, cols));
    st.J = std::move(cols);
    st.I = std::move(rows);
    st.row_pos.clear();
    for (std::size_t q = 0; q < st.I.size(); ++q) st.row_pos.emplace(st.I[q], static_cast<Index>(q));
    st.col_set = std::unordered_set<Index>(st.J.begin(), st.J.end());
    resolve(st);
}

// sum_i r(i) * A(i, j), both sorted by row
double residual_dot_column(const ColumnState& st, const CscMatrix& a, Index j) {
    const auto rows = a.col_rows(j);
    const auto vals = a.col_values(j);
    double s = 0.0;
    std::size_t p = 0, q = 0;
    while (p < st.r_idx.size() && q < rows.size()) {
        if (st.r_idx[p] < rows[q]) {
            ++p;
        } else if (st.r_idx[p] > rows[q]) {
            ++q;
        } else {
            s += st.r_val[p] * vals[q];
            ++p;
            ++q;
        }
    }
    return s;
}

void sorted_unique(std::vector<Index>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

} // namespace

ColumnState init_column(const SaiContext& ctx, Index k) {
    if (k < 0 || k >= ctx.a().n_cols()) throw InputError("init_column: column index out of range");
    ColumnState st;
    st.k = k;
    rebuild(ctx, st, {k});
    st.power_support = {k};
    st.visited = {k};
    return st;
}

void augment_pattern(const SaiContext& ctx, ColumnState& st, std::vector<Index> new_cols) {
    sorted_unique(new_cols);
    std::erase_if(new_cols, [&](Index j) { return st.in_pattern(j); });
    if (new_cols.empty()) return;

    std::vector<Index> new_rows;
    for (Index j : new_cols)
        for (Index i : ctx.a().col_rows(j))
            if (!st.row_pos.contains(i)) new_rows.push_back(i);
    sorted_unique(new_rows);

    // existing columns vanish on the new rows
    st.factor.append_rows(DenseMatrix(static_cast<Index>(new_rows.size()), static_cast<Index>(st.J.size())));
    for (Index i : new_rows) {
        st.row_pos.emplace(i, static_cast<Index>(st.I.size()));
        st.I.push_back(i);
    }

    DenseMatrix block(static_cast<Index>(st.I.size()), static_cast<Index>(new_cols.size()));
    for (std::size_t c = 0; c < new_cols.size(); ++c) {
        const auto rows = ctx.a().col_rows(new_cols[c]);
        const auto vals = ctx.a().col_values(new_cols[c]);
        for (std::size_t q = 0; q < rows.size(); ++q)
            block(st.row_pos.at(rows[q]), static_cast<Index>(c)) = vals[q];
    }
    st.factor.append_columns(block);
    for (Index j : new_cols) {
        st.J.push_back(j);
        st.col_set.insert(j);
    }
    resolve(st);
}

std::vector<ScoredCandidate> spai_candidates(const SaiContext& ctx, const ColumnState& st) {
    std::vector<Index> cand;
    for (Index i : st.r_idx)
        for (Index j : ctx.at().col_rows(i))
            if (!st.in_pattern(j)) cand.push_back(j);
    sorted_unique(cand);

    std::vector<ScoredCandidate> out;
    out.reserve(cand.size());
    const double rn2 = st.r_norm * st.r_norm;
    for (Index j : cand) {
        const double proj = residual_dot_column(st, ctx.a(), j);
        const double rho2 = rn2 - proj * proj / ctx.col_norm2(j);
        out.push_back({j, proj, std::sqrt(std::max(0.0, rho2))});
    }
    return out;
}

void spai_select_and_augment(const SaiContext& ctx, ColumnState& st,
                             const std::vector<ScoredCandidate>& candidates, int add_count) {
    std::vector<ScoredCandidate> ranked = candidates;
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max(add_count, 1)), ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(),
                      [](const ScoredCandidate& a, const ScoredCandidate& b) {
                          return a.rho < b.rho || (a.rho == b.rho && a.j < b.j);
                      });
    std::vector<Index> chosen;
    for (std::size_t q = 0; q < take; ++q) chosen.push_back(ranked[q].j);
    augment_pattern(ctx, st, std::move(chosen));
}

bool psai_expand(const SaiContext& ctx, ColumnState& st) {
    std::vector<Index> next;
    for (Index j : st.power_support) {
        const auto rows = ctx.a().col_rows(j);
        next.insert(next.end(), rows.begin(), rows.end());
    }
    sorted_unique(next);
    std::vector<Index> fresh;
    std::set_difference(next.begin(), next.end(), st.visited.begin(), st.visited.end(),
                        std::back_inserter(fresh));
    if (static_cast<Index>(st.J.size() + fresh.size()) > ctx.pattern_cap()) {
        st.capped = true;
        return false;
    }
    st.power_support = std::move(next);
    if (fresh.empty()) return true;
    std::vector<Index> merged;
    std::set_union(st.visited.begin(), st.visited.end(), fresh.begin(), fresh.end(), std::back_inserter(merged));
    st.visited = std::move(merged);
    augment_pattern(ctx, st, std::move(fresh));
    return true;
}

std::vector<Index> rsai_dominant(ColumnState& st, int count) {
    std::vector<std::pair<double, Index>> pool;
    for (std::size_t q = 0; q < st.r_idx.size(); ++q) {
        const Index i = st.r_idx[q];
        if (st.r_val[q] == 0.0) continue;
        if (std::find(st.history.begin(), st.history.end(), i) != st.history.end()) continue;
        pool.emplace_back(std::fabs(st.r_val[q]), i);
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max(count, 0)), pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    std::vector<Index> out;
    for (std::size_t q = 0; q < take; ++q) out.push_back(pool[q].second);
    std::sort(out.begin(), out.end());
    st.history.insert(st.history.end(), out.begin(), out.end());
    return out;
}

void rsai_augment(const SaiContext& ctx, ColumnState& st, const std::vector<Index>& dominant) {
    std::vector<Index> cols;
    for (Index i : dominant)
        for (Index j : ctx.at().col_rows(i))
            if (!st.in_pattern(j)) cols.push_back(j);
    augment_pattern(ctx, st, std::move(cols));
}

void apply_dropping(const SaiContext& ctx, ColumnState& st) {
    const double eta = ctx.params().eta;
    const double norm1 = ctx.a_one_norm();
    for (;;) {
        const auto nnz = std::count_if(st.m_tilde.begin(), st.m_tilde.end(), [](double v) { return v != 0.0; });
        if (nnz == 0 || norm1 == 0.0) return;
        const double tau = eta / (static_cast<double>(nnz) * norm1);
        std::vector<Index> keep;
        bool dropped = false;
        for (std::size_t q = 0; q < st.J.size(); ++q) {
            const Index j = st.J[q];
            if (j != st.k && std::fabs(st.m_tilde[q]) <= tau) {
                st.drops.push_back({j, st.m_tilde[q], tau});
                dropped = true;
            } else {
                keep.push_back(j);
            }
        }
        if (!dropped) return;
        rebuild(ctx, st, std::move(keep));
    }
}

ColumnState build_column(const SaiContext& ctx, Index k) {
    const auto& prm = ctx.params();
    ColumnState st = init_column(ctx, k);
    if (ctx.a().col_nnz(k) == 0) return st;
    if (prm.drop_enabled) apply_dropping(ctx, st);

    for (int loop = 0; loop < prm.l_max && st.r_norm > prm.eta; ++loop) {
        ++st.loops;
        switch (prm.strategy) {
        case SaiStrategy::spai: {
            const auto cands = spai_candidates(ctx, st);
            if (cands.empty()) {
                st.stagnated = true;
                break;
            }
            spai_select_and_augment(ctx, st, cands, prm.add_count);
            break;
        }
        case SaiStrategy::psai:
            psai_expand(ctx, st);
            break;
        case SaiStrategy::rsai: {
            const auto dom = rsai_dominant(st, prm.dominant_count);
            if (dom.empty()) {
                st.stagnated = true;
                break;
            }
            rsai_augment(ctx, st, dom);
            break;
        }
        }
        if (st.stagnated || st.capped) break;
        if (prm.drop_enabled) apply_dropping(ctx, st);
    }
    return st;
}

Preconditioner build_preconditioner(const CscMatrix& a, const SaiParams& params) {
    const auto start = std::chrono::steady_clock::now();
    const SaiContext ctx(a, params);
    const Index n = a.n_cols();

    struct ColumnResult {
        std::vector<std::pair<Index, double>> entries;
        double residual = 1.0;
        bool capped = false;
        bool stagnated = false;
        std::vector<DropRecord> drops;
    };
    std::vector<ColumnResult> results(static_cast<std::size_t>(n));

    std::atomic<Index> next{0};
    std::mutex err_mutex;
    Index err_col = n;
    std::string err_msg;
    auto worker = [&] {
        for (Index k = next++; k < n; k = next++) {
            try {
                auto st = build_column(ctx, k);
                auto& res = results[k];
                res.entries = st.column_entries();
                res.residual = st.r_norm;
                res.capped = st.capped;
                res.stagnated = st.stagnated;
                if (params.record_drops) res.drops = std::move(st.drops);
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mutex);
                if (k < err_col) {
                    err_col = k;
                    err_msg = e.what();
                }
            }
        }
    };
    unsigned threads = params.threads ? params.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<Index>(n, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (err_col < n)
        throw NumericalError("sparse approximate inverse, column " + std::to_string(err_col + 1) + ": " + err_msg);

    Preconditioner pc;
    pc.eta = params.eta;
    std::vector<Index> ptr(static_cast<std::size_t>(n) + 1, 0), rows;
    std::vector<double> vals;
    pc.col_residuals.resize(static_cast<std::size_t>(n));
    if (params.record_drops) pc.drops.resize(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) {
        auto& res = results[k];
        for (const auto& [i, v] : res.entries) {
            rows.push_back(i);
            vals.push_back(v);
        }
        ptr[k + 1] = static_cast<Index>(rows.size());
        pc.col_residuals[k] = res.residual;
        if (res.residual > params.eta) ++pc.n_c;
        if (res.capped) ++pc.capped_columns;
        if (res.stagnated) ++pc.stagnated_columns;
        if (params.record_drops) pc.drops[k] = std::move(res.drops);
    }
    pc.m = CscMatrix(n, n, std::move(ptr), std::move(rows), std::move(vals));
    pc.spar = a.nnz() > 0 ? static_cast<double>(pc.m.nnz()) / static_cast<double>(a.nnz()) : 0.0;
    pc.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return pc;
}

} // namespace irsai
