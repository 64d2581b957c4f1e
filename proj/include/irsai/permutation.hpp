#pragma once

#include <vector>

#include "irsai/csc_matrix.hpp"

namespace irsai {

/// Row permutation: row i of the permuted matrix is row perm[i] of the original.
struct Permutation {
    std::vector<Index> perm;

    static Permutation identity(Index n);
    Index size() const noexcept { return static_cast<Index>(perm.size()); }
    bool is_identity() const;
    /// True when perm is a bijection on {0..n-1}.
    bool is_valid() const;
    Permutation inverse() const;
};

/// B(i, :) = A(p.perm[i], :).
CscMatrix permute_rows(const CscMatrix& a, const Permutation& p);

/// x_perm[i] = x[p.perm[i]].
std::vector<double> permute_vector(std::span<const double> x, const Permutation& p);

/// Every diagonal entry stored and numerically nonzero.
bool has_zero_free_diagonal(const CscMatrix& a);

struct ZeroFreeDiagonal {
    Permutation permutation;
    CscMatrix matrix;
};

/// Row permutation giving a zero-free diagonal, from a maximum bipartite
/// matching on the numerically nonzero entries (depth-first augmenting paths
/// with cheap assignment, columns visited in natural order). Returns the
/// identity when the diagonal is already zero-free. Throws
/// StructurallySingularError naming an unmatched column otherwise.
ZeroFreeDiagonal zero_free_diagonal_permutation(const CscMatrix& a);

} // namespace irsai
