#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "irsai/permutation.hpp"
#include "irsai/transform.hpp"

namespace irsai {

inline constexpr int kReportVersion = 1;

enum class OutputFormat { json, csv, text };
enum class Pipeline { standard, transformed, both };

OutputFormat parse_output_format(std::string_view name);
Pipeline parse_pipeline(std::string_view name);
std::string_view to_string(OutputFormat f);
std::string_view to_string(Pipeline p);

/// Settings of one solve invocation, echoed into its report.
struct RunConfig {
    std::string matrix_path;
    /// "ones" (b = A * 1) or the path of a right-hand side file.
    std::string rhs_mode = "ones";
    SaiParams sai = SaiParams::defaults(SaiStrategy::psai);
    double eps = 1e-8;
    int max_iter = 1000;
    double factor = 10.0;
    Pipeline pipeline = Pipeline::transformed;
    OutputFormat format = OutputFormat::json;
    std::uint64_t seed = 0;
};

/// Density and splitting statistics of a (permuted) matrix. Indices are
/// stored 0-based and written 1-based.
struct AnalysisReport {
    std::string matrix;
    Index n = 0;
    Index nnz = 0;
    Index p = 0;
    double factor = 10.0;
    double threshold = 0.0;
    Index s1 = 0;
    Index s2 = 0;
    Index p_dc = 0;
    Index p_dr = 0;
    Index nnz_hat = 0;
    double nu = 0.0;
    std::vector<Index> dense_cols;
    std::vector<Index> dense_rows;
    bool permuted = false;
    /// Row permutation applied before analysis (empty when none).
    std::vector<Index> permutation;
};

AnalysisReport make_analysis(std::string matrix, const IrregularSplit& sp, const Permutation* applied);

std::string render_analysis(const AnalysisReport& r, OutputFormat f);
std::string render_solve(const RunConfig& cfg, const AnalysisReport& analysis, const std::vector<SolveReport>& runs,
                         OutputFormat f);

} // namespace irsai
