#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "irsai/csc_matrix.hpp"

namespace irsai {

struct MatrixMarketOptions {
    /// Drop entries whose (summed) value is exactly zero, so that nnz counts
    /// numerically nonzero entries only.
    bool drop_zeros = true;
};

/// Reads a coordinate real/integer Matrix Market file (general, symmetric or
/// skew-symmetric). Indices are converted to 0-based; symmetric storage is
/// expanded; duplicates are summed.
CscMatrix read_matrix_market(const std::filesystem::path& path, MatrixMarketOptions opts = {});
CscMatrix read_matrix_market(std::istream& in, MatrixMarketOptions opts = {});

/// Reads a dense vector: either a Matrix Market `array real general` file
/// with one column, or plain whitespace-separated numbers ('%' and '#'
/// start comment lines).
std::vector<double> read_dense_vector(const std::filesystem::path& path);
std::vector<double> read_dense_vector(std::istream& in);

/// Writes `coordinate real general` with round-trip exact values.
void write_matrix_market(const std::filesystem::path& path, const CscMatrix& a,
                         const std::string& comment = {});
void write_matrix_market(std::ostream& out, const CscMatrix& a, const std::string& comment = {});

} // namespace irsai
