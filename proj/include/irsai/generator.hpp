#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "irsai/csc_matrix.hpp"

namespace irsai {

enum class GeneratorKind { diag_dominant, random_spd_like };

std::string_view to_string(GeneratorKind k);
GeneratorKind parse_generator_kind(std::string_view name);

struct GeneratorParams {
    Index n = 100;
    /// Entries per column of the banded base (diagonal included).
    Index p = 3;
    Index s1 = 0;
    Index s2 = 0;
    GeneratorKind kind = GeneratorKind::diag_dominant;
    std::uint64_t seed = 0;
    /// diag = (1 + margin) * max(off-diagonal row sum, off-diagonal column sum).
    double margin = 0.5;
    /// Fraction of n filled in each densified line.
    double fill = 1.0;
    double factor = 10.0;

    void validate() const;
};

struct GeneratedMatrix {
    CscMatrix a;
    std::vector<Index> dense_cols;
    std::vector<Index> dense_rows;
};

/// Banded random base with off-diagonal values +-U(0.1, 1), s1 columns and
/// s2 rows densified, then a strictly dominant positive diagonal. The
/// random_spd_like kind is symmetric (s1 must equal s2; the dense rows are
/// the dense columns). Throws InputError when the density profile of the
/// result does not flag exactly the declared lines.
GeneratedMatrix generate(const GeneratorParams& params);

} // namespace irsai
