#include "irsai/dense_ls.hpp"

#include <algorithm>
#include <cmath>

#include "irsai/error.hpp"

namespace irsai {
namespace {

struct Householder {
    DenseMatrix q;
    DenseMatrix r;
};

// Thin Householder QR. Columns j >= m get zero Q columns and zero R rows.
Householder householder_qr(const DenseMatrix& b) {
    const Index m = b.rows();
    const Index k = b.cols();
    const Index t = std::min(m, k);
    DenseMatrix a = b;
    std::vector<std::vector<double>> vs(static_cast<std::size_t>(t));
    std::vector<double> betas(static_cast<std::size_t>(t), 0.0);

    for (Index j = 0; j < t; ++j) {
        auto col = a.col(j);
        const double alpha = norm2(col.subspan(static_cast<std::size_t>(j)));
        auto& v = vs[j];
        v.assign(col.begin() + j, col.end());
        if (alpha == 0.0) continue;
        const double sign = v[0] >= 0.0 ? 1.0 : -1.0;
        v[0] += sign * alpha;
        const double vnorm2 = dot(v, v);
        betas[j] = 2.0 / vnorm2;
        for (Index c = j; c < k; ++c) {
            auto ac = a.col(c).subspan(static_cast<std::size_t>(j));
            const double s = betas[j] * dot(v, ac);
            for (std::size_t i = 0; i < v.size(); ++i) ac[i] -= s * v[i];
        }
        // clean the annihilated part exactly
        for (Index i = j + 1; i < m; ++i) a(i, j) = 0.0;
    }

    Householder out{DenseMatrix(m, k), DenseMatrix(k, k)};
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i <= std::min(j, m - 1); ++i) out.r(i, j) = a(i, j);
    for (Index j = 0; j < t; ++j) out.q(j, j) = 1.0;
    for (Index j = t - 1; j >= 0; --j) {
        if (betas[j] == 0.0) continue;
        const auto& v = vs[j];
        for (Index c = 0; c < t; ++c) {
            auto qc = out.q.col(c).subspan(static_cast<std::size_t>(j));
            const double s = betas[j] * dot(v, qc);
            if (s == 0.0) continue;
            for (std::size_t i = 0; i < v.size(); ++i) qc[i] -= s * v[i];
        }
    }
    return out;
}

double max_diag(const DenseMatrix& r) {
    double best = 0.0;
    for (Index i = 0; i < r.cols(); ++i) best = std::max(best, std::fabs(r(i, i)));
    return best;
}

} // namespace

QrFactor::QrFactor(DenseMatrix b) : b_(std::move(b)) { refactor(); }

void QrFactor::refactor() {
    auto h = householder_qr(b_);
    q_ = std::move(h.q);
    r_ = std::move(h.r);
    orthonormal_ = b_.rows() >= b_.cols();
    base_cols_ = b_.cols();
    updates_ = 0;
    ++refactorizations_;
}

void QrFactor::count_update() {
    ++updates_;
    if (updates_ > 2 * std::max<Index>(1, base_cols_)) refactor();
}

std::vector<Index> QrFactor::deficient_columns() const {
    std::vector<Index> out;
    const double tol = kRankTolerance * max_diag(r_);
    for (Index i = 0; i < r_.cols(); ++i)
        if (!(std::fabs(r_(i, i)) > tol)) out.push_back(i);
    return out;
}

bool QrFactor::rank_deficient() const { return !deficient_columns().empty(); }

void QrFactor::append_columns(const DenseMatrix& c) {
    if (c.cols() == 0) return;
    if (cols() == 0) {
        b_ = c;
        refactor();
        return;
    }
    if (c.rows() != rows()) throw InputError("qr_append_columns: row count mismatch");
    const Index m = rows();
    const Index k0 = cols();
    b_.resize(m, k0 + c.cols());
    for (Index j = 0; j < c.cols(); ++j)
        for (Index i = 0; i < m; ++i) b_(i, k0 + j) = c(i, j);

    if (!orthonormal_ || k0 + c.cols() > m) {
        refactor();
        return;
    }

    q_.resize(m, k0 + c.cols());
    r_.resize(k0 + c.cols(), k0 + c.cols());
    std::vector<double> w(static_cast<std::size_t>(m));
    for (Index j = 0; j < c.cols(); ++j) {
        const Index kk = k0 + j;
        auto cj = c.col(j);
        std::copy(cj.begin(), cj.end(), w.begin());
        // classical Gram-Schmidt, applied twice
        for (int pass = 0; pass < 2; ++pass) {
            for (Index l = 0; l < kk; ++l) {
                const double h = dot(q_.col(l), w);
                r_(l, kk) += h;
                const auto ql = q_.col(l);
                for (Index i = 0; i < m; ++i) w[i] -= h * ql[i];
            }
        }
        const double rkk = norm2(w);
        const double scale = std::max(max_diag(r_), rkk);
        if (!(rkk > kRankTolerance * scale)) {
            refactor();
            return;
        }
        r_(kk, kk) = rkk;
        auto qk = q_.col(kk);
        for (Index i = 0; i < m; ++i) qk[i] = w[i] / rkk;
    }
    count_update();
}

void QrFactor::append_rows(const DenseMatrix& rows) {
    if (rows.rows() == 0) return;
    if (rows.cols() != cols()) throw InputError("qr_append_rows: column count mismatch");
    const Index m0 = this->rows();
    const Index k = cols();
    const Index r = rows.rows();
    b_.resize(m0 + r, k);
    bool zero = true;
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < r; ++i) {
            b_(m0 + i, j) = rows(i, j);
            zero = zero && rows(i, j) == 0.0;
        }

    if (!orthonormal_) {
        refactor();
        return;
    }
    if (zero) {
        // [B; 0] = [Q; 0] R exactly
        q_.resize(m0 + r, k);
        return;
    }

    DenseMatrix stacked(k + r, k);
    for (Index j = 0; j < k; ++j) {
        for (Index i = 0; i <= j; ++i) stacked(i, j) = r_(i, j);
        for (Index i = 0; i < r; ++i) stacked(k + i, j) = rows(i, j);
    }
    auto h = householder_qr(stacked);
    DenseMatrix q_new(m0 + r, k);
    for (Index j = 0; j < k; ++j) {
        for (Index l = 0; l < k; ++l) {
            const double s = h.q(l, j);
            if (s == 0.0) continue;
            const auto ql = q_.col(l);
            for (Index i = 0; i < m0; ++i) q_new(i, j) += ql[i] * s;
        }
        for (Index i = 0; i < r; ++i) q_new(m0 + i, j) = h.q(k + i, j);
    }
    q_ = std::move(q_new);
    r_ = std::move(h.r);
    count_update();
}

QrFactor qr_factorize(const DenseMatrix& b) { return QrFactor(b); }

QrFactor qr_append_columns(QrFactor f, const DenseMatrix& c) {
    f.append_columns(c);
    return f;
}

RowAppendResult qr_append_rows(QrFactor f, const DenseMatrix& new_rows, std::span<const double> rhs_old,
                               std::span<const double> rhs_new) {
    if (static_cast<Index>(rhs_old.size()) != f.rows() || static_cast<Index>(rhs_new.size()) != new_rows.rows())
        throw InputError("qr_append_rows: right-hand side length mismatch");
    f.append_rows(new_rows);
    std::vector<double> rhs(rhs_old.begin(), rhs_old.end());
    rhs.insert(rhs.end(), rhs_new.begin(), rhs_new.end());
    return {std::move(f), std::move(rhs)};
}

LsSolution ls_solve(const QrFactor& f, std::span<const double> rhs) {
    const Index m = f.rows();
    const Index k = f.cols();
    if (static_cast<Index>(rhs.size()) != m) throw InputError("ls_solve: right-hand side length mismatch");
    LsSolution sol;
    sol.x.assign(static_cast<std::size_t>(k), 0.0);
    const auto& q = f.q();
    const auto& r = f.r();
    std::vector<double> qtb(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) qtb[j] = dot(q.col(j), rhs);

    const auto deficient = f.deficient_columns();
    std::vector<char> skip(static_cast<std::size_t>(k), 0);
    for (Index j : deficient) skip[j] = 1;
    sol.rank_deficient = !deficient.empty();
    for (Index i = k - 1; i >= 0; --i) {
        if (skip[i]) continue;
        double s = qtb[i];
        for (Index j = i + 1; j < k; ++j) s -= r(i, j) * sol.x[j];
        sol.x[i] = s / r(i, i);
    }

    std::vector<double> res(rhs.begin(), rhs.end());
    const auto& b = f.matrix();
    for (Index j = 0; j < k; ++j) {
        const double xj = sol.x[j];
        if (xj == 0.0) continue;
        const auto bj = b.col(j);
        for (Index i = 0; i < m; ++i) res[i] -= bj[i] * xj;
    }
    sol.residual_norm = norm2(res);
    return sol;
}

DenseMatrix small_dense_solve(const DenseMatrix& s, const DenseMatrix& rhs) {
    const Index n = s.rows();
    if (s.cols() != n) throw InputError("small_dense_solve: matrix must be square");
    if (rhs.rows() != n) throw InputError("small_dense_solve: right-hand side row mismatch");
    double norm1 = 0.0;
    for (Index j = 0; j < n; ++j) {
        double c = 0.0;
        for (double v : s.col(j)) c += std::fabs(v);
        norm1 = std::max(norm1, c);
    }
    DenseMatrix lu = s;
    DenseMatrix x = rhs;
    const double tol = 1e-14 * norm1;
    for (Index k = 0; k < n; ++k) {
        Index piv = k;
        for (Index i = k + 1; i < n; ++i)
            if (std::fabs(lu(i, k)) > std::fabs(lu(piv, k))) piv = i;
        if (!(std::fabs(lu(piv, k)) > tol))
            throw SingularMatrixError("matrix singular to working precision (pivot " + std::to_string(k) + ")");
        if (piv != k) {
            for (Index j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
            for (Index j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
        }
        for (Index i = k + 1; i < n; ++i) {
            const double l = lu(i, k) / lu(k, k);
            lu(i, k) = l;
            for (Index j = k + 1; j < n; ++j) lu(i, j) -= l * lu(k, j);
            for (Index j = 0; j < x.cols(); ++j) x(i, j) -= l * x(k, j);
        }
    }
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = n - 1; i >= 0; --i) {
            double v = x(i, j);
            for (Index l = i + 1; l < n; ++l) v -= lu(i, l) * x(l, j);
            x(i, j) = v / lu(i, i);
        }
    return x;
}

} // namespace irsai
