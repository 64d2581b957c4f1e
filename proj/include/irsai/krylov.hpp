#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irsai/csc_matrix.hpp"

namespace irsai {

struct Preconditioner;

/// y = Op(x); must be pure so that solves can share it across threads.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

LinearOperator make_operator(const CscMatrix& a);

struct KrylovStats {
    /// Full BiCGStab steps; an exit after the first half of a step counts
    /// as a whole step.
    int iterations = 0;
    /// True relative residual ||b - A x|| / ||b|| of the returned iterate.
    double final_rel_residual = 0.0;
    /// Set when the recurrence broke down ("rho", "alpha", "omega", "stagnation").
    std::optional<std::string> breakdown;
    bool converged = false;
};

struct KrylovResult {
    std::vector<double> x;
    KrylovStats stats;
};

/// Right-preconditioned BiCGStab on A M y = b, returning x = M y. Stops when
/// the true relative residual ||b - A x|| / ||b|| <= rel_tol (the recursive
/// residual is only used as a gate before recomputing it) or after max_iter
/// steps. A null preconditioner means M = I. When r_hat . r or r_hat . v
/// vanishes the recurrence restarts with r_hat = r; a breakdown is reported
/// only if it recurs before the restarted recurrence completes a step, and
/// then the iterate with the smallest residual seen is returned. Throws NumericalError on NaN/Inf.
KrylovResult bicgstab(const LinearOperator& a, const LinearOperator* m, std::span<const double> b,
                      double rel_tol, int max_iter, std::span<const double> x0 = {});

/// Convenience overload with sparse operands.
KrylovResult bicgstab(const CscMatrix& a, const CscMatrix* m, std::span<const double> b, double rel_tol,
                      int max_iter, std::span<const double> x0 = {});

/// M v.
std::vector<double> apply_preconditioner(const Preconditioner& m, std::span<const double> v);

} // namespace irsai
