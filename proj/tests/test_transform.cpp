#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "irsai/density.hpp"
#include "irsai/error.hpp"
#include "irsai/generator.hpp"
#include "irsai/transform.hpp"
#include "test_support.hpp"

using namespace irsai;
using namespace irsai::testing;

namespace {

// n x n banded base (lower bidiagonal or tridiagonal) plus a full column and
// a full row.
CscMatrix banded_with_lines(Index n, bool tridiagonal, Index full_col, Index full_row) {
    std::vector<Triplet> t;
    auto put = [&](Index i, Index j) { t.push_back({i, j, 1.0 + 0.01 * i + 0.001 * j}); };
    std::set<std::pair<Index, Index>> seen;
    auto add = [&](Index i, Index j) {
        if (i < 0 || j < 0 || i >= n || j >= n) return;
        if (seen.insert({i, j}).second) put(i, j);
    };
    for (Index i = 0; i < n; ++i) {
        add(i, i);
        add(i + 1, i);
        if (tridiagonal) add(i - 1, i);
    }
    for (Index i = 0; i < n; ++i) add(i, full_col);
    for (Index j = 0; j < n; ++j) add(full_row, j);
    return CscMatrix::from_triplets(n, n, t);
}

std::vector<Index> rows_of(const CscMatrix& a, Index j) {
    auto r = a.col_rows(j);
    return {r.begin(), r.end()};
}

Eigen::MatrixXd dense_u1(const IrregularSplit& sp) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(sp.n, sp.s1());
    for (Index k = 0; k < sp.s1(); ++k)
        for (std::size_t q = 0; q < sp.u1[k].idx.size(); ++q) u(sp.u1[k].idx[q], k) = sp.u1[k].val[q];
    return u;
}

Eigen::MatrixXd dense_v2(const IrregularSplit& sp) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(sp.n, sp.s2());
    for (Index k = 0; k < sp.s2(); ++k)
        for (std::size_t q = 0; q < sp.v2[k].idx.size(); ++q) v(sp.v2[k].idx[q], k) = sp.v2[k].val[q];
    return v;
}

Eigen::MatrixXd dense_selection(Index n, const std::vector<Index>& idx) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) e(idx[k], k) = 1.0;
    return e;
}

DenseMatrix to_dense(const Eigen::MatrixXd& m) { return from_eigen(m); }

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// A small hand-assembled split: A_hat random dominant, one dense column and
// two dense rows with arbitrary (not necessarily disjoint) updates.
IrregularSplit manual_split(std::mt19937_64& rng, Index n) {
    IrregularSplit sp;
    sp.n = n;
    sp.a_hat = random_sparse(rng, n, 0.3);
    sp.dense_col_idx = {1};
    sp.dense_row_idx = {3, 4};
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    sp.u1.resize(1);
    sp.u1[0] = {{0, 2, 5}, {u(rng), u(rng), u(rng)}};
    sp.v2.resize(2);
    sp.v2[0] = {{0, 1, 5}, {u(rng), u(rng), u(rng)}};
    sp.v2[1] = {{2, 3}, {u(rng), u(rng)}};
    for (const auto& v : sp.v2) sp.nu = std::max(sp.nu, v.norm());
    return sp;
}

Eigen::MatrixXd assembled(const IrregularSplit& sp) {
    return to_eigen(sp.a_hat) + dense_u1(sp) * dense_selection(sp.n, sp.dense_col_idx).transpose() +
           dense_selection(sp.n, sp.dense_row_idx) * dense_v2(sp).transpose();
}

// Exact z, P, Q via dense solves with A_hat.
RecoveryState exact_state(const IrregularSplit& sp, const Eigen::VectorXd& b) {
    const auto lu = to_eigen(sp.a_hat).partialPivLu();
    RecoveryState st;
    st.z = to_std(lu.solve(b));
    st.P = to_dense(lu.solve(dense_u1(sp)));
    st.Q = to_dense(lu.solve(dense_selection(sp.n, sp.dense_row_idx)));
    return st;
}

} // namespace

TEST(Split, RegularMatrixIsNoOp) {
    std::mt19937_64 rng(300);
    auto a = random_sparse(rng, 30, 0.05);
    auto sp = split(a, density_profile(a));
    EXPECT_EQ(sp.s1(), 0);
    EXPECT_EQ(sp.s2(), 0);
    EXPECT_EQ(sp.a_hat, a);
    EXPECT_EQ(sp.nu, 0.0);
}

TEST(Split, BidiagonalWithFullLinesKeepsNearestThree) {
    auto a = banded_with_lines(50, false, 7, 11);
    auto prof = density_profile(a);
    ASSERT_EQ(prof.p, 3);
    auto sp = split(a, prof);
    EXPECT_EQ(sp.dense_col_idx, (std::vector<Index>{7}));
    EXPECT_EQ(sp.dense_row_idx, (std::vector<Index>{11}));
    EXPECT_EQ(rows_of(sp.a_hat, 7), (std::vector<Index>{6, 7, 8}));
    auto at = sp.a_hat.transpose();
    EXPECT_EQ(rows_of(at, 11), (std::vector<Index>{10, 11, 12}));
    EXPECT_EQ(reconstruct(sp), a);
    EXPECT_TRUE(assembled(sp).isApprox(to_eigen(a), 0.0));
}

TEST(Split, TridiagonalWithFullLinesUsesProfileP) {
    // The extra band raises floor(nnz / n) to 4, so one more neighbour is
    // kept; equidistant ties go to the smaller index.
    auto a = banded_with_lines(50, true, 7, 11);
    auto prof = density_profile(a);
    ASSERT_EQ(prof.p, 4);
    auto sp = split(a, prof);
    EXPECT_EQ(rows_of(sp.a_hat, 7), (std::vector<Index>{5, 6, 7, 8}));
    EXPECT_EQ(rows_of(sp.a_hat.transpose(), 11), (std::vector<Index>{9, 10, 11, 12}));
    // Row 11 of A_tilde lost its column-7 entry in the column step.
    EXPECT_EQ(sp.profile.p_dr, 49);
    EXPECT_EQ(reconstruct(sp), a);
}

TEST(Split, WindowSpillsPastMatrixEdge) {
    // Dense column 0: no rows above the diagonal, so the quota is filled below.
    auto a = banded_with_lines(50, false, 0, 49);
    auto sp = split(a, density_profile(a));
    EXPECT_EQ(rows_of(sp.a_hat, 0), (std::vector<Index>{0, 1, 2}));
    EXPECT_EQ(rows_of(sp.a_hat.transpose(), 49), (std::vector<Index>{47, 48, 49}));
    EXPECT_EQ(reconstruct(sp), a);
}

TEST(Split, MissingDiagonalIsRejected) {
    auto a = banded_with_lines(50, false, 7, 11);
    std::vector<Triplet> t;
    for (Index j = 0; j < 50; ++j) {
        auto r = a.col_rows(j);
        auto v = a.col_values(j);
        for (std::size_t q = 0; q < r.size(); ++q)
            if (!(r[q] == 7 && j == 7)) t.push_back({r[q], j, v[q]});
    }
    auto b = CscMatrix::from_triplets(50, 50, t);
    EXPECT_THROW(split(b, density_profile(b)), InputError);
}

TEST(Split, ReconstructionAndRegularityOnGeneratedMatrices) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        GeneratorParams gp;
        gp.n = 100 + 10 * static_cast<Index>(seed);
        gp.p = 2 + static_cast<Index>(seed % 3);
        gp.s1 = static_cast<Index>(seed % 4);
        gp.s2 = static_cast<Index>((seed + 1) % 4);
        gp.seed = seed;
        auto g = generate(gp);
        auto prof = density_profile(g.a);
        auto sp = split(g.a, prof);
        EXPECT_EQ(reconstruct(sp), g.a);
        EXPECT_EQ(sp.dense_col_idx, prof.dense_cols);
        EXPECT_EQ(sp.dense_row_idx, prof.dense_rows);
        for (Index j : sp.dense_col_idx) EXPECT_LE(sp.a_hat.col_nnz(j), prof.p);
        const auto at = sp.a_hat.transpose();
        for (Index i : sp.dense_row_idx) EXPECT_LE(at.col_nnz(i), prof.p);
        double nu = 0.0;
        const auto v2 = dense_v2(sp);
        for (Index k = 0; k < sp.s2(); ++k) nu = std::max(nu, v2.col(k).norm());
        EXPECT_DOUBLE_EQ(sp.nu, nu);
    }
}

TEST(Tolerances, Examples) {
    auto t = derive_tolerances(1e-8, 4, 0, 0.0);
    EXPECT_DOUBLE_EQ(*t.tol_p, 1.25e-9);
    EXPECT_FALSE(t.tol_q.has_value());

    auto none = derive_tolerances(1e-8, 0, 0, 0.0);
    EXPECT_EQ(none.tol_z, 2.5e-9);
    EXPECT_FALSE(none.tol_p.has_value());
    EXPECT_FALSE(none.tol_q.has_value());

    auto q = derive_tolerances(1e-8, 0, 9, 10.0);
    EXPECT_NEAR(*q.tol_q, 1e-8 / 120.0, 1e-24);
    EXPECT_EQ(q.c0, 1.0);
    EXPECT_EQ(q.c1, 10.0);
    EXPECT_EQ(q.c2, 10.0);

    EXPECT_THROW(derive_tolerances(0.0, 1, 1, 1.0), InputError);
}

TEST(Recover, NoDenseLinesReturnsZ) {
    IrregularSplit sp;
    sp.n = 3;
    sp.a_hat = CscMatrix::identity(3);
    RecoveryState st;
    st.z = {1.0, 2.0, 3.0};
    st.P = DenseMatrix(3, 0);
    st.Q = DenseMatrix(3, 0);
    EXPECT_EQ(recover_solution(st, sp), st.z);
}

TEST(Recover, ZeroU1GivesY) {
    std::mt19937_64 rng(301);
    auto sp = manual_split(rng, 6);
    sp.u1[0] = {};
    Eigen::VectorXd b = to_eigen(random_vector(rng, 6));
    auto st = exact_state(sp, b);
    auto x = recover_solution(st, sp);
    EXPECT_EQ(x, st.y);
    EXPECT_EQ(st.W.frobenius_norm(), 0.0);
}

TEST(Recover, MatchesDenseInverse) {
    std::mt19937_64 rng(302);
    for (int trial = 0; trial < 20; ++trial) {
        auto sp = manual_split(rng, 6);
        Eigen::VectorXd b = to_eigen(random_vector(rng, 6));
        auto st = exact_state(sp, b);
        auto x = recover_solution(st, sp);
        Eigen::VectorXd want = assembled(sp).partialPivLu().solve(b);
        EXPECT_LE((to_eigen(x) - want).norm() / want.norm(), 1e-10);
    }
}

TEST(Recover, SingularCapacitanceIsReported) {
    // A_hat = I, one dense row 0 with v = -e_0: I + V2^T Q = 1 - 1 = 0.
    IrregularSplit sp;
    sp.n = 3;
    sp.a_hat = CscMatrix::identity(3);
    sp.dense_row_idx = {0};
    sp.v2 = {SparseVector{{0}, {-1.0}}};
    RecoveryState st;
    st.z = {1.0, 1.0, 1.0};
    st.P = DenseMatrix(3, 0);
    st.Q = DenseMatrix(3, 1);
    st.Q(0, 0) = 1.0;
    try {
        recover_solution(st, sp);
        FAIL() << "expected SingularMatrixError";
    } catch (const SingularMatrixError& e) {
        EXPECT_NE(std::string(e.what()).find("capacitance"), std::string::npos);
    }
}

TEST(Smw, Examples) {
    std::mt19937_64 rng(303);
    auto shift = [](DenseMatrix a) {
        for (Index i = 0; i < a.rows(); ++i) a(i, i) += 3.0;
        return a;
    };
    auto a5 = shift(random_dense(rng, 5, 5));
    EXPECT_LE(smw_inverse_check(a5, DenseMatrix(5, 2), random_dense(rng, 5, 2)), 1e-14);
    EXPECT_LE(smw_inverse_check(a5, random_dense(rng, 5, 1), random_dense(rng, 5, 1)), 1e-12);
    auto a10 = shift(random_dense(rng, 10, 10));
    EXPECT_LE(smw_inverse_check(a10, random_dense(rng, 10, 3), random_dense(rng, 10, 3)), 1e-11);
    EXPECT_THROW(smw_inverse_check(DenseMatrix(3, 3), random_dense(rng, 3, 1), random_dense(rng, 3, 1)),
                 SingularMatrixError);
}

TEST(SolveIrregular, DegenerateSplitMatchesStandardBitwise) {
    std::mt19937_64 rng(304);
    auto a = random_sparse(rng, 80, 0.04);
    auto b = spmv(a, std::vector<double>(80, 1.0));
    for (auto s : {SaiStrategy::spai, SaiStrategy::psai, SaiStrategy::rsai}) {
        SolveOptions o;
        o.sai = SaiParams::defaults(s);
        auto std_run = solve_standard(a, b, o);
        auto tr_run = solve_irregular(a, b, o);
        EXPECT_EQ(std_run.x, tr_run.x);
        EXPECT_EQ(tr_run.report.s1, 0);
        EXPECT_EQ(tr_run.report.per_system_iters, std_run.report.per_system_iters);
        EXPECT_EQ(tr_run.report.r_actual, std_run.report.r_actual);
        EXPECT_EQ(tr_run.report.pipeline, "transformed");
    }
}

TEST(SolveIrregular, FiftyByFiftyRecoversOnes) {
    GeneratorParams gp;
    gp.n = 50;
    gp.p = 3;
    gp.s1 = 1;
    gp.s2 = 1;
    gp.seed = 5;
    auto g = generate(gp);
    std::vector<double> ones(50, 1.0);
    auto b = spmv(g.a, ones);
    for (auto s : {SaiStrategy::spai, SaiStrategy::psai, SaiStrategy::rsai}) {
        SolveOptions o;
        o.sai = SaiParams::defaults(s);
        auto run = solve_irregular(g.a, b, o);
        EXPECT_EQ(run.report.s1, 1);
        EXPECT_EQ(run.report.s2, 1);
        EXPECT_EQ(run.report.per_system_iters.size(), 3u);
        EXPECT_TRUE(run.report.converged);
        EXPECT_LE(run.report.r_actual, 1e-8);
        EXPECT_LT(run.report.a_ratio, 1.0);
        for (double v : run.x) EXPECT_NEAR(v, 1.0, 1e-6);
        ASSERT_TRUE(run.report.exact_constants.has_value());
        EXPECT_GT(run.report.exact_constants->c0, 0.0);
    }
}

TEST(SolveIrregular, SubsystemLimitReportsNonConvergence) {
    GeneratorParams gp;
    gp.n = 200;
    gp.p = 3;
    gp.s1 = 2;
    gp.s2 = 2;
    gp.margin = 0.01;
    gp.seed = 9;
    auto g = generate(gp);
    auto b = spmv(g.a, std::vector<double>(200, 1.0));
    SolveOptions o;
    o.max_iter = 1;
    auto run = solve_irregular(g.a, b, o);
    EXPECT_FALSE(run.report.converged);
    EXPECT_EQ(run.x.size(), 200u);
}

TEST(SolveIrregular, RejectsBadInput) {
    std::vector<double> b(3, 1.0);
    SolveOptions o;
    EXPECT_THROW(solve_irregular(CscMatrix::identity(4), b, o), InputError);
    o.eps = -1.0;
    EXPECT_THROW(solve_irregular(CscMatrix::identity(3), b, o), InputError);
}

// If z, P, Q meet the stopping criteria stated with the exact constants, the
// recovered x meets eps. Residuals are planted at 90% of each bound.
TEST(ToleranceSufficiency, ExactConstantsGuaranteeEps) {
    const double eps = 1e-8;
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        GeneratorParams gp;
        gp.n = 60;
        gp.p = 2;
        gp.s1 = 1 + static_cast<Index>(seed % 2);
        gp.s2 = 1 + static_cast<Index>((seed / 2) % 2);
        gp.margin = 0.05;
        gp.seed = 1000 + seed;
        auto g = generate(gp);
        auto sp = split(g.a, density_profile(g.a));
        const Eigen::VectorXd b = to_eigen(g.a) * Eigen::VectorXd::Ones(60);
        const double nb = b.norm();
        auto st = exact_state(sp, b);
        const auto c_exact = exact_bound_constants(st, sp);

        std::mt19937_64 rng(seed);
        const auto lu = to_eigen(sp.a_hat).partialPivLu();
        auto plant = [&](double target) {
            Eigen::VectorXd d = to_eigen(random_vector(rng, 60));
            d *= target / d.norm();
            return Eigen::VectorXd(lu.solve(d));
        };
        const double s1 = sp.s1(), s2 = sp.s2();
        Eigen::VectorXd z = to_eigen(st.z) + plant(0.9 * eps * nb / 4.0);
        st.z = to_std(z);
        for (Index k = 0; k < sp.s1(); ++k) {
            Eigen::VectorXd pk = to_eigen(st.P.col(k)) + plant(0.9 * eps * nb / (4.0 * std::sqrt(s1) * c_exact.c0));
            std::copy(pk.data(), pk.data() + 60, st.P.col(k).begin());
        }
        const double q_bound = eps * nb / (2.0 * std::sqrt(s2) * (c_exact.c0 * c_exact.c2 + c_exact.c1));
        for (Index k = 0; k < sp.s2(); ++k) {
            Eigen::VectorXd qk = to_eigen(st.Q.col(k)) + plant(0.9 * q_bound);
            std::copy(qk.data(), qk.data() + 60, st.Q.col(k).begin());
        }
        auto x = recover_solution(st, sp);
        const auto c = exact_bound_constants(st, sp);

        // Criteria with the constants of the perturbed iterates.
        const Eigen::MatrixXd ah = to_eigen(sp.a_hat);
        const double rz = (b - ah * to_eigen(st.z)).norm();
        bool ok = rz <= eps * nb / 4.0;
        double rp_f = 0.0, rq_f = 0.0;
        const Eigen::MatrixXd U1 = dense_u1(sp);
        for (Index k = 0; k < sp.s1(); ++k) {
            const double r = (U1.col(k) - ah * to_eigen(st.P.col(k))).norm();
            rp_f += r * r;
            ok = ok && r <= eps * nb / (4.0 * std::sqrt(s1) * c.c0);
        }
        for (Index k = 0; k < sp.s2(); ++k) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(60);
            e(sp.dense_row_idx[k]) = 1.0;
            const double r = (e - ah * to_eigen(st.Q.col(k))).norm();
            rq_f += r * r;
            ok = ok && r <= eps * nb / (2.0 * std::sqrt(s2) * (c.c0 * c.c2 + c.c1));
        }
        if (!ok) continue;
        ++checked;
        const double r = (b - to_eigen(g.a) * to_eigen(x)).norm();
        EXPECT_LE(r, rz + c.c0 * std::sqrt(rp_f) + (c.c0 * c.c2 + c.c1) * std::sqrt(rq_f) + 1e-14 * nb);
        EXPECT_LE(r / nb, eps);
    }
    EXPECT_GE(checked, 10);
}

TEST(ExactConstants, AgreeWithDenseDefinitions) {
    std::mt19937_64 rng(305);
    auto sp = manual_split(rng, 6);
    Eigen::VectorXd b = to_eigen(random_vector(rng, 6));
    auto st = exact_state(sp, b);
    recover_solution(st, sp);
    const auto c = exact_bound_constants(st, sp);

    const Eigen::MatrixXd V2 = dense_v2(sp);
    const Eigen::MatrixXd Q = to_eigen(st.Q);
    const Eigen::MatrixXd P = to_eigen(st.P);
    const Eigen::MatrixXd G = Eigen::MatrixXd::Identity(2, 2) + V2.transpose() * Q;
    const double c1 = G.partialPivLu().solve(V2.transpose() * to_eigen(st.z)).norm();
    const Eigen::MatrixXd GP = G.partialPivLu().solve(V2.transpose() * P);
    const double c2 = Eigen::JacobiSVD<Eigen::MatrixXd>(GP).singularValues()(0);
    const Eigen::MatrixXd V1 = dense_selection(6, sp.dense_col_idx);
    const Eigen::MatrixXd W = to_eigen(st.W);
    const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(1, 1) + V1.transpose() * W;
    const double c0 = K.partialPivLu().solve(V1.transpose() * to_eigen(st.y)).norm();
    EXPECT_NEAR(c.c0, c0, 1e-12 * c0);
    EXPECT_NEAR(c.c1, c1, 1e-12 * c1);
    EXPECT_NEAR(c.c2, c2, 1e-10 * c2);
}
