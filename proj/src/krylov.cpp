#include "irsai/krylov.hpp"

#include <cmath>
#include <limits>

#include "irsai/error.hpp"
#include "irsai/sai.hpp"

namespace irsai {

namespace {

constexpr double kBreakdown = 1e-290;
constexpr int kStagnationWindow = 50;
constexpr double kStagnationChange = 1e-16;

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericalError(std::string("BiCGStab: non-finite ") + what);
}

} // namespace

LinearOperator make_operator(const CscMatrix& a) {
    return [&a](std::span<const double> x, std::span<double> y) { spmv(a, x, y); };
}

KrylovResult bicgstab(const LinearOperator& a, const LinearOperator* m, std::span<const double> b,
                      double rel_tol, int max_iter, std::span<const double> x0) {
    if (!(rel_tol > 0.0)) throw InputError("bicgstab: rel_tol must be positive");
    if (max_iter < 0) throw InputError("bicgstab: max_iter must be nonnegative");
    const std::size_t n = b.size();
    if (!x0.empty() && x0.size() != n) throw InputError("bicgstab: initial guess has wrong length");

    KrylovResult out;
    out.x.assign(n, 0.0);
    if (!x0.empty()) std::copy(x0.begin(), x0.end(), out.x.begin());
    auto& x = out.x;
    auto& st = out.stats;

    const double bnorm = norm2(b);
    check_finite(bnorm, "right-hand side");
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        st.converged = true;
        return out;
    }

    std::vector<double> r(n), tmp(n);
    auto true_residual = [&](std::span<const double> xs) {
        a(xs, tmp);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
        return norm2(r) / bnorm;
    };
    auto precond = [&](std::span<const double> in, std::span<double> res) {
        if (m) {
            (*m)(in, res);
        } else {
            std::copy(in.begin(), in.end(), res.begin());
        }
    };

    double rel = true_residual(x);
    check_finite(rel, "residual");
    st.final_rel_residual = rel;
    if (rel <= rel_tol) {
        st.converged = true;
        return out;
    }

    std::vector<double> r_hat(r), p(n, 0.0), v(n, 0.0), p_hat(n), s(n), s_hat(n), t(n);
    std::vector<double> x_best(x);
    double best_rel = rel;
    double rho_old = 1.0, alpha = 1.0, omega = 1.0;
    double window_start = rel;
    bool restart = true;
    // set while the current recurrence has not yet completed a step
    bool fresh = true;

    auto finish_breakdown = [&](const char* stage) {
        st.breakdown = stage;
        x = x_best;
        st.final_rel_residual = true_residual(x);
        return out;
    };

    for (int it = 1; it <= max_iter; ++it) {
        st.iterations = it;
        double rho = dot(r_hat, r);
        check_finite(rho, "rho");
        if (std::fabs(rho) < kBreakdown) {
            if (fresh) return finish_breakdown("rho");
            // shadow residual orthogonal to r: restart the recurrence from r
            r_hat = r;
            restart = true;
            rho = dot(r_hat, r);
        }
        if (restart) {
            p = r;
            restart = false;
            fresh = true;
        } else {
            const double beta = (rho / rho_old) * (alpha / omega);
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(p, p_hat);
        a(p_hat, v);
        const double rv = dot(r_hat, v);
        check_finite(rv, "r_hat.v");
        if (std::fabs(rv) < kBreakdown) {
            if (fresh) return finish_breakdown("alpha");
            r_hat = r;
            restart = true;
            rho_old = rho;
            continue;
        }
        alpha = rho / rv;
        fresh = false;

        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        axpy(alpha, p_hat, x);
        const double s_rel = norm2(s) / bnorm;
        check_finite(s_rel, "residual");
        if (s_rel < best_rel) {
            best_rel = s_rel;
            x_best = x;
        }
        if (s_rel <= rel_tol) {
            const double tr = true_residual(x);
            if (tr <= rel_tol) {
                st.final_rel_residual = tr;
                st.converged = true;
                return out;
            }
        }

        precond(s, s_hat);
        a(s_hat, t);
        const double tt = dot(t, t);
        check_finite(tt, "t.t");
        if (tt == 0.0) return finish_breakdown("omega");
        omega = dot(t, s) / tt;
        if (std::fabs(omega) < kBreakdown) return finish_breakdown("omega");
        axpy(omega, s_hat, x);
        for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];

        rel = norm2(r) / bnorm;
        check_finite(rel, "residual");
        if (rel < best_rel) {
            best_rel = rel;
            x_best = x;
        }
        if (rel <= rel_tol) {
            const double tr = true_residual(x);  // overwrites r with b - A x
            if (tr <= rel_tol) {
                st.final_rel_residual = tr;
                st.converged = true;
                return out;
            }
            // recursive residual drifted: restart the recurrence from the true one
            r_hat = r;
            restart = true;
        }
        if (it % kStagnationWindow == 0) {
            if (std::fabs(window_start - best_rel) <= kStagnationChange * window_start)
                return finish_breakdown("stagnation");
            window_start = best_rel;
        }
        rho_old = rho;
    }

    x = x_best;
    st.final_rel_residual = true_residual(x);
    st.converged = st.final_rel_residual <= rel_tol;
    return out;
}

KrylovResult bicgstab(const CscMatrix& a, const CscMatrix* m, std::span<const double> b, double rel_tol,
                      int max_iter, std::span<const double> x0) {
    if (!a.is_square() || static_cast<Index>(b.size()) != a.n_rows())
        throw InputError("bicgstab: operator and right-hand side dimensions disagree");
    if (m != nullptr && (m->n_rows() != a.n_rows() || m->n_cols() != a.n_cols()))
        throw InputError("bicgstab: preconditioner dimensions disagree");
    const auto op = make_operator(a);
    if (m == nullptr) return bicgstab(op, nullptr, b, rel_tol, max_iter, x0);
    const auto mop = make_operator(*m);
    return bicgstab(op, &mop, b, rel_tol, max_iter, x0);
}

std::vector<double> apply_preconditioner(const Preconditioner& m, std::span<const double> v) {
    return spmv(m.m, v);
}

} // namespace irsai
