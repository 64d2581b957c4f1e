#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "irsai/error.hpp"
#include "irsai/sai.hpp"
#include "test_support.hpp"

using namespace irsai;
using namespace irsai::testing;

namespace {

SaiParams exact_params(SaiStrategy s, int l_max) {
    SaiParams p = SaiParams::defaults(s);
    p.eta = 1e-12;
    p.l_max = l_max;
    p.drop_enabled = false;
    p.threads = 1;
    return p;
}

// ||A(:, J) m - e_k|| minimized by a dense oracle.
double oracle_residual(const CscMatrix& a, Index k, const std::vector<Index>& J) {
    const auto dense = to_eigen(a);
    Eigen::MatrixXd sub(dense.rows(), static_cast<Eigen::Index>(J.size()));
    for (std::size_t c = 0; c < J.size(); ++c) sub.col(c) = dense.col(J[c]);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dense.rows());
    e(k) = 1.0;
    Eigen::VectorXd m = sub.colPivHouseholderQr().solve(e);
    return (sub * m - e).norm();
}

// ||A m_k - e_k|| recomputed from the state's pattern and coefficients.
Eigen::VectorXd recomputed_residual(const CscMatrix& a, const ColumnState& st) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(a.n_cols());
    for (std::size_t q = 0; q < st.J.size(); ++q) m(st.J[q]) = st.m_tilde[q];
    Eigen::VectorXd r = to_eigen(a) * m;
    r(st.k) -= 1.0;
    return r;
}

void expect_state_consistent(const CscMatrix& a, const ColumnState& st) {
    std::set<Index> rows;
    for (Index j : st.J)
        for (Index i : a.col_rows(j)) rows.insert(i);
    std::set<Index> have(st.I.begin(), st.I.end());
    EXPECT_EQ(have, rows);
    EXPECT_EQ(have.size(), st.I.size());
    const double r = recomputed_residual(a, st).norm();
    EXPECT_NEAR(st.r_norm, r, 1e-10 * std::max(1.0, r));
}

// Golden-section minimization of f(mu) = ||r + mu * a_j|| on [lo, hi].
double scalar_min(const Eigen::VectorXd& r, const Eigen::VectorXd& aj, double lo, double hi) {
    auto f = [&](double mu) { return (r + mu * aj).norm(); };
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    return std::min(f1, f2);
}

ColumnState state_with_residual(std::vector<Index> idx, std::vector<double> val) {
    ColumnState st;
    st.r_idx = std::move(idx);
    st.r_val = std::move(val);
    return st;
}

} // namespace

TEST(SaiParams, DefaultsAndValidation) {
    auto spai = SaiParams::defaults(SaiStrategy::spai);
    EXPECT_EQ(spai.l_max, 20);
    EXPECT_FALSE(spai.drop_enabled);
    EXPECT_EQ(spai.add_count, 5);
    auto rsai = SaiParams::defaults(SaiStrategy::rsai);
    EXPECT_EQ(rsai.l_max, 10);
    EXPECT_TRUE(rsai.drop_enabled);
    EXPECT_EQ(rsai.dominant_count, 3);
    EXPECT_EQ(rsai.eta, 0.4);

    SaiParams bad = spai;
    bad.eta = 1.0;
    EXPECT_THROW(bad.validate(), InputError);
    bad = spai;
    bad.l_max = 0;
    EXPECT_THROW(bad.validate(), InputError);
    bad = spai;
    bad.add_count = 0;
    EXPECT_THROW(bad.validate(), InputError);
    EXPECT_EQ(parse_strategy("rsai"), SaiStrategy::rsai);
    EXPECT_THROW(parse_strategy("ilu"), InputError);
}

TEST(BuildPreconditioner, IdentityGivesIdentity) {
    for (auto s : {SaiStrategy::spai, SaiStrategy::psai, SaiStrategy::rsai}) {
        auto pc = build_preconditioner(CscMatrix::identity(6), SaiParams::defaults(s));
        EXPECT_EQ(pc.m, CscMatrix::identity(6));
        EXPECT_EQ(pc.n_c, 0);
        for (double r : pc.col_residuals) EXPECT_EQ(r, 0.0);
    }
}

TEST(BuildPreconditioner, DiagonalInverse) {
    std::vector<double> d{2, 4, 5};
    auto pc = build_preconditioner(CscMatrix::diagonal(d), SaiParams::defaults(SaiStrategy::psai));
    EXPECT_EQ(pc.m.at(0, 0), 0.5);
    EXPECT_EQ(pc.m.at(1, 1), 0.25);
    EXPECT_EQ(pc.m.at(2, 2), 0.2);
    EXPECT_EQ(pc.m.nnz(), 3);
}

TEST(BuildPreconditioner, EmptyColumnCountsAsUnresolved) {
    std::vector<Triplet> t{{0, 0, 1.0}, {1, 0, 1.0}, {2, 2, 1.0}};
    auto pc = build_preconditioner(CscMatrix::from_triplets(3, 3, t), SaiParams::defaults(SaiStrategy::spai));
    EXPECT_EQ(pc.col_residuals[1], 1.0);
    EXPECT_EQ(pc.m.col_nnz(1), 0);
    EXPECT_GE(pc.n_c, 1);
}

TEST(BuildPreconditioner, PsaiReproducesDenseInverse) {
    std::mt19937_64 rng(100);
    auto a = random_sparse(rng, 8, 0.25);
    auto pc = build_preconditioner(a, exact_params(SaiStrategy::psai, 8));
    const Eigen::MatrixXd am = to_eigen(a) * to_eigen(pc.m);
    EXPECT_LE((am - Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-8);
}

TEST(BuildPreconditioner, ReportedStatisticsAreConsistent) {
    std::mt19937_64 rng(101);
    auto a = random_sparse(rng, 40, 0.08, false);
    for (auto s : {SaiStrategy::spai, SaiStrategy::psai, SaiStrategy::rsai}) {
        auto prm = SaiParams::defaults(s);
        prm.l_max = 3;
        auto pc = build_preconditioner(a, prm);
        Index n_c = 0;
        for (Index k = 0; k < 40; ++k) {
            if (pc.col_residuals[k] > prm.eta) ++n_c;
            Eigen::VectorXd r = to_eigen(a) * to_eigen(pc.m).col(k);
            r(k) -= 1.0;
            EXPECT_NEAR(pc.col_residuals[k], r.norm(), 1e-10);
        }
        EXPECT_EQ(pc.n_c, n_c);
        EXPECT_DOUBLE_EQ(pc.spar, static_cast<double>(pc.m.nnz()) / a.nnz());
    }
}

TEST(BuildPreconditioner, ThreadCountDoesNotChangeResult) {
    std::mt19937_64 rng(102);
    auto a = random_sparse(rng, 120, 0.03, false);
    for (auto s : {SaiStrategy::spai, SaiStrategy::psai, SaiStrategy::rsai}) {
        auto prm = SaiParams::defaults(s);
        prm.threads = 1;
        auto serial = build_preconditioner(a, prm);
        prm.threads = 4;
        auto parallel = build_preconditioner(a, prm);
        EXPECT_EQ(serial.m, parallel.m);
        EXPECT_EQ(serial.col_residuals, parallel.col_residuals);
    }
}

TEST(InitColumn, Examples) {
    const auto eye_matrix = CscMatrix::identity(4);
    SaiContext eye(eye_matrix, SaiParams{});
    auto st = init_column(eye, 2);
    EXPECT_EQ(st.J, (std::vector<Index>{2}));
    EXPECT_EQ(st.m_tilde[0], 1.0);
    EXPECT_EQ(st.r_norm, 0.0);

    std::vector<double> d{1, 2, 2};
    const auto diag_matrix = CscMatrix::diagonal(d);
    SaiContext diag(diag_matrix, SaiParams{});
    auto s2 = init_column(diag, 1);
    EXPECT_EQ(s2.m_tilde[0], 0.5);
    EXPECT_EQ(s2.r_norm, 0.0);

    std::mt19937_64 rng(103);
    auto a = random_sparse(rng, 5, 0.5, false);
    SaiContext ctx(a, SaiParams{});
    for (Index k = 0; k < 5; ++k) {
        auto s = init_column(ctx, k);
        EXPECT_NEAR(s.r_norm, oracle_residual(a, k, {k}), 1e-12);
        expect_state_consistent(a, s);
    }
    EXPECT_THROW(init_column(ctx, 5), InputError);
}

TEST(SpaiCandidates, IdentityHasNone) {
    const auto ctx_matrix = CscMatrix::identity(5);
    SaiContext ctx(ctx_matrix, SaiParams::defaults(SaiStrategy::spai));
    EXPECT_TRUE(spai_candidates(ctx, init_column(ctx, 3)).empty());
}

TEST(SpaiCandidates, ScoresMatchScalarMinimization) {
    std::mt19937_64 rng(104);
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
        auto a = random_sparse(rng, 6, 0.4, false);
        SaiContext ctx(a, SaiParams::defaults(SaiStrategy::spai));
        const auto dense = to_eigen(a);
        for (Index k = 0; k < 6; ++k) {
            auto st = init_column(ctx, k);
            const Eigen::VectorXd r = recomputed_residual(a, st);
            std::set<Index> expect;
            for (std::size_t q = 0; q < st.r_idx.size(); ++q)
                for (Index j = 0; j < 6; ++j)
                    if (dense(st.r_idx[q], j) != 0.0 && !st.in_pattern(j)) expect.insert(j);
            const auto cands = spai_candidates(ctx, st);
            std::set<Index> got;
            for (const auto& c : cands) {
                got.insert(c.j);
                const Eigen::VectorXd aj = dense.col(c.j);
                const double bound = 2.0 * r.norm() / aj.norm() + 1.0;
                const double want = scalar_min(r, aj, -bound, bound);
                EXPECT_NEAR(c.rho, want, 1e-12 * std::max(1.0, want));
                EXPECT_LE(c.rho, st.r_norm + 1e-15);
                ++checked;
            }
            EXPECT_EQ(got, expect);
        }
    }
    EXPECT_GT(checked, 30);
}

TEST(SpaiSelect, SingleCandidateIsAdded) {
    // Column 0 touches row 1, which only column 1 shares.
    std::vector<Triplet> t{{0, 0, 2.0}, {1, 0, 1.0}, {1, 1, 3.0}, {2, 2, 1.0}};
    auto a = CscMatrix::from_triplets(3, 3, t);
    SaiContext ctx(a, SaiParams::defaults(SaiStrategy::spai));
    auto st = init_column(ctx, 0);
    auto cands = spai_candidates(ctx, st);
    ASSERT_EQ(cands.size(), 1u);
    spai_select_and_augment(ctx, st, cands, 5);
    EXPECT_EQ(st.J, (std::vector<Index>{0, 1}));
    EXPECT_NEAR(st.r_norm, 0.0, 1e-15);
}

TEST(SpaiSelect, AddCountSaturates) {
    std::mt19937_64 rng(105);
    auto a = random_sparse(rng, 10, 0.5, false);
    SaiContext ctx(a, SaiParams::defaults(SaiStrategy::spai));
    auto st = init_column(ctx, 4);
    auto cands = spai_candidates(ctx, st);
    ASSERT_FALSE(cands.empty());
    spai_select_and_augment(ctx, st, cands, 100);
    EXPECT_EQ(st.J.size(), cands.size() + 1);
}

TEST(SpaiSelect, PicksSmallestRhoWithIndexTieBreak) {
    std::mt19937_64 rng(106);
    auto a = random_sparse(rng, 12, 0.4, false);
    SaiContext ctx(a, SaiParams::defaults(SaiStrategy::spai));
    auto st = init_column(ctx, 0);
    auto cands = spai_candidates(ctx, st);
    ASSERT_GE(cands.size(), 3u);
    auto ranked = cands;
    std::sort(ranked.begin(), ranked.end(), [](auto& x, auto& y) { return x.rho < y.rho || (x.rho == y.rho && x.j < y.j); });
    std::set<Index> want{0, ranked[0].j, ranked[1].j};
    spai_select_and_augment(ctx, st, cands, 2);
    EXPECT_EQ(std::set<Index>(st.J.begin(), st.J.end()), want);

    // Equal scores: two identical columns, the smaller index wins.
    std::vector<Triplet> t{{0, 0, 1.0}, {1, 0, 1.0}, {1, 1, 2.0}, {1, 2, 2.0}, {2, 2, 5.0}, {2, 1, 5.0}};
    auto b = CscMatrix::from_triplets(3, 3, t);
    SaiContext c2(b, SaiParams::defaults(SaiStrategy::spai));
    auto s2 = init_column(c2, 0);
    auto c = spai_candidates(c2, s2);
    ASSERT_EQ(c.size(), 2u);
    ASSERT_EQ(c[0].rho, c[1].rho);
    spai_select_and_augment(c2, s2, c, 1);
    EXPECT_EQ(s2.J, (std::vector<Index>{0, 1}));
}

TEST(SpaiSelect, TwoLoopsMatchOneShotLs) {
    std::mt19937_64 rng(107);
    auto a = random_sparse(rng, 8, 0.3, false);
    SaiContext ctx(a, SaiParams::defaults(SaiStrategy::spai));
    for (Index k = 0; k < 8; ++k) {
        auto st = init_column(ctx, k);
        for (int loop = 0; loop < 2; ++loop) {
            auto cands = spai_candidates(ctx, st);
            if (cands.empty()) break;
            const double before = st.r_norm;
            spai_select_and_augment(ctx, st, cands, 2);
            EXPECT_LE(st.r_norm, before + 1e-12);
            expect_state_consistent(a, st);
        }
        EXPECT_NEAR(st.r_norm, oracle_residual(a, k, st.J), 1e-10);
    }
}

TEST(PsaiExpand, BidiagonalGrowsAChain) {
    const Index n = 8;
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i) {
        t.push_back({i, i, 1.0});
        if (i + 1 < n) t.push_back({i + 1, i, 1.0});
    }
    const auto ctx_matrix = CscMatrix::from_triplets(n, n, t);
    SaiContext ctx(ctx_matrix, exact_params(SaiStrategy::psai, 10));
    auto st = init_column(ctx, 2);
    for (int l = 1; l <= 4; ++l) {
        ASSERT_TRUE(psai_expand(ctx, st));
        std::vector<Index> want;
        for (Index i = 2; i <= std::min<Index>(2 + l, n - 1); ++i) want.push_back(i);
        auto J = st.J;
        std::sort(J.begin(), J.end());
        EXPECT_EQ(J, want);
    }
}

TEST(PsaiExpand, IdentityStaysPut) {
    const auto ctx_matrix = CscMatrix::identity(4);
    SaiContext ctx(ctx_matrix, exact_params(SaiStrategy::psai, 10));
    auto st = init_column(ctx, 1);
    psai_expand(ctx, st);
    EXPECT_EQ(st.J, (std::vector<Index>{1}));
}

TEST(PsaiExpand, PatternMatchesPowerSupport) {
    std::mt19937_64 rng(108);
    for (int trial = 0; trial < 10; ++trial) {
        auto a = random_sparse(rng, 7, 0.15, false);
        SaiContext ctx(a, exact_params(SaiStrategy::psai, 10));
        const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(7, 7) + to_eigen(a).cwiseAbs();
        for (Index k = 0; k < 7; ++k) {
            auto st = init_column(ctx, k);
            Eigen::VectorXd v = Eigen::VectorXd::Zero(7);
            v(k) = 1.0;
            for (int l = 0; l < 3; ++l) {
                psai_expand(ctx, st);
                v = step * v;
                expect_state_consistent(a, st);
            }
            std::set<Index> want;
            for (Index i = 0; i < 7; ++i)
                if (v(i) != 0.0) want.insert(i);
            EXPECT_EQ(std::set<Index>(st.J.begin(), st.J.end()), want);
        }
    }
}

TEST(PsaiExpand, CapStopsGrowth) {
    std::mt19937_64 rng(109);
    auto a = random_sparse(rng, 30, 0.3, false);
    auto prm = exact_params(SaiStrategy::psai, 10);
    prm.pattern_cap = 3;
    SaiContext ctx(a, prm);
    auto st = init_column(ctx, 0);
    EXPECT_FALSE(psai_expand(ctx, st));
    EXPECT_TRUE(st.capped);
    EXPECT_EQ(st.J, (std::vector<Index>{0}));
}

TEST(RsaiDominant, Examples) {
    auto single = state_with_residual({3}, {0.7});
    EXPECT_EQ(rsai_dominant(single, 3), (std::vector<Index>{3}));

    auto st = state_with_residual({0, 1, 2, 3}, {0.5, -0.9, 0.9, 0.1});
    EXPECT_EQ(rsai_dominant(st, 2), (std::vector<Index>{1, 2}));
    EXPECT_EQ(rsai_dominant(st, 2), (std::vector<Index>{0, 3}));
    EXPECT_TRUE(rsai_dominant(st, 2).empty());
    EXPECT_EQ(st.history.size(), 4u);
}

TEST(RsaiDominant, ReplayOfHistoryRule) {
    std::mt19937_64 rng(110);
    for (int trial = 0; trial < 20; ++trial) {
        auto vals = random_vector(rng, 12);
        std::vector<Index> idx(12);
        for (Index i = 0; i < 12; ++i) idx[i] = i;
        auto st = state_with_residual(idx, vals);
        std::set<Index> seen;
        for (int call = 0; call < 5; ++call) {
            // Oracle: largest |r_i| among unseen, by full sort.
            std::vector<Index> order;
            for (Index i = 0; i < 12; ++i)
                if (!seen.contains(i)) order.push_back(i);
            std::stable_sort(order.begin(), order.end(),
                             [&](Index x, Index y) { return std::abs(vals[x]) > std::abs(vals[y]); });
            order.resize(std::min<std::size_t>(3, order.size()));
            std::sort(order.begin(), order.end());
            auto got = rsai_dominant(st, 3);
            EXPECT_EQ(got, order);
            for (Index i : got) EXPECT_TRUE(seen.insert(i).second);
        }
    }
}

TEST(RsaiAugment, Examples) {
    const auto eye_matrix = CscMatrix::identity(4);
    SaiContext eye(eye_matrix, exact_params(SaiStrategy::rsai, 5));
    auto st = init_column(eye, 2);
    rsai_augment(eye, st, {2});
    EXPECT_EQ(st.J, (std::vector<Index>{2}));

    // Row 0 is full.
    const Index n = 6;
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i) t.push_back({i, i, 4.0});
    for (Index j = 1; j < n; ++j) t.push_back({0, j, 1.0});
    auto a = CscMatrix::from_triplets(n, n, t);
    SaiContext ctx(a, exact_params(SaiStrategy::rsai, 5));
    auto s = init_column(ctx, 3);
    rsai_augment(ctx, s, {0});
    EXPECT_EQ(std::set<Index>(s.J.begin(), s.J.end()), (std::set<Index>{0, 1, 2, 3, 4, 5}));
    expect_state_consistent(a, s);
}

TEST(RsaiAugment, FullRunMatchesOneShotLs) {
    std::mt19937_64 rng(111);
    auto a = random_sparse(rng, 8, 0.25, false);
    SaiContext ctx(a, exact_params(SaiStrategy::rsai, 8));
    for (Index k = 0; k < 8; ++k) {
        auto st = build_column(ctx, k);
        expect_state_consistent(a, st);
        EXPECT_NEAR(st.r_norm, oracle_residual(a, k, st.J), 1e-10);
    }
}

TEST(Residual, MonotoneAcrossLoops) {
    std::mt19937_64 rng(112);
    auto a = random_sparse(rng, 25, 0.12, false);
    for (auto s : {SaiStrategy::spai, SaiStrategy::rsai, SaiStrategy::psai}) {
        SaiContext ctx(a, exact_params(s, 6));
        for (Index k = 0; k < 25; ++k) {
            auto st = init_column(ctx, k);
            for (int loop = 0; loop < 6 && st.r_norm > 1e-12; ++loop) {
                const double before = st.r_norm;
                if (s == SaiStrategy::spai) {
                    auto c = spai_candidates(ctx, st);
                    if (c.empty()) break;
                    spai_select_and_augment(ctx, st, c, 3);
                } else if (s == SaiStrategy::rsai) {
                    auto d = rsai_dominant(st, 3);
                    if (d.empty()) break;
                    rsai_augment(ctx, st, d);
                } else if (!psai_expand(ctx, st)) {
                    break;
                }
                EXPECT_LE(st.r_norm, before + 1e-12);
            }
        }
    }
}

TEST(Dropping, LargeEntriesUntouched) {
    std::mt19937_64 rng(113);
    auto a = random_sparse(rng, 6, 0.6, false);
    auto prm = SaiParams::defaults(SaiStrategy::psai);
    prm.eta = 1e-30;
    SaiContext ctx(a, prm);
    auto st = init_column(ctx, 0);
    psai_expand(ctx, st);
    auto before = st.J;
    apply_dropping(ctx, st);
    EXPECT_EQ(st.J, before);
    EXPECT_TRUE(st.drops.empty());
}

TEST(Dropping, TinyEntryIsDropped) {
    // A = [[1, 0], [-1e-16, 1]]: column 0 of A^-1 is (1, 1e-16).
    std::vector<Triplet> t{{0, 0, 1.0}, {1, 0, -1e-16}, {1, 1, 1.0}};
    auto a = CscMatrix::from_triplets(2, 2, t);
    auto prm = exact_params(SaiStrategy::psai, 5);
    prm.eta = 0.4;
    prm.drop_enabled = true;
    SaiContext ctx(a, prm);
    ASSERT_EQ(ctx.a_one_norm(), 1.0);
    auto st = init_column(ctx, 0);
    psai_expand(ctx, st);
    ASSERT_EQ(st.J.size(), 2u);
    apply_dropping(ctx, st);
    EXPECT_EQ(st.J, (std::vector<Index>{0}));
    ASSERT_EQ(st.drops.size(), 1u);
    EXPECT_EQ(st.drops[0].row, 1);
    EXPECT_DOUBLE_EQ(st.drops[0].threshold, 0.4 / 2.0);
}

TEST(Dropping, DropSetMatchesScalarOracle) {
    std::mt19937_64 rng(114);
    int dropped = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_sparse(rng, 20, 0.15, false);
        auto prm = exact_params(SaiStrategy::psai, 4);
        prm.eta = 0.4;
        SaiContext ctx(a, prm);
        for (Index k = 0; k < 20; ++k) {
            auto st = init_column(ctx, k);
            psai_expand(ctx, st);
            psai_expand(ctx, st);
            const auto J = st.J;
            const auto m = st.m_tilde;
            Index nnz = 0;
            for (double v : m) nnz += v != 0.0;
            const double tau = 0.4 / (nnz * one_norm(a));
            std::set<Index> want;
            for (std::size_t q = 0; q < J.size(); ++q)
                if (J[q] != k && std::abs(m[q]) <= tau) want.insert(J[q]);
            apply_dropping(ctx, st);
            std::set<Index> first_round;
            for (const auto& d : st.drops)
                if (d.threshold == tau) first_round.insert(d.row);
            EXPECT_EQ(first_round, want);
            dropped += static_cast<int>(want.size());
            EXPECT_TRUE(st.in_pattern(k));
            expect_state_consistent(a, st);
        }
    }
    EXPECT_GT(dropped, 0);
}
