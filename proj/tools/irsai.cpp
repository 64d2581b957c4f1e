// Command-line front end: analyze, solve and generate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "irsai/density.hpp"
#include "irsai/error.hpp"
#include "irsai/generator.hpp"
#include "irsai/matrix_market.hpp"
#include "irsai/permutation.hpp"
#include "irsai/report.hpp"
#include "irsai/transform.hpp"

using namespace irsai;

namespace {

enum ExitCode { kOk = 0, kNotConverged = 2, kInputError = 3, kNumericalError = 4 };

struct LoadedSystem {
    CscMatrix a;
    std::vector<double> b;
    std::optional<Permutation> applied;
};

// Reads A, builds b and permutes rows when the diagonal has a zero.
LoadedSystem load(const std::string& path, const std::string& rhs) {
    LoadedSystem sys;
    sys.a = read_matrix_market(path);
    if (!sys.a.is_square())
        throw InputError(path + ": matrix is " + std::to_string(sys.a.n_rows()) + "x" +
                         std::to_string(sys.a.n_cols()) + ", need a square matrix");
    if (rhs == "ones") {
        const std::vector<double> ones(static_cast<std::size_t>(sys.a.n_cols()), 1.0);
        sys.b = spmv(sys.a, ones);
    } else if (!rhs.empty()) {
        sys.b = read_dense_vector(rhs);
        if (static_cast<Index>(sys.b.size()) != sys.a.n_rows())
            throw InputError(rhs + ": right-hand side has " + std::to_string(sys.b.size()) + " entries, need " +
                             std::to_string(sys.a.n_rows()));
    }
    if (!has_zero_free_diagonal(sys.a)) {
        auto zfd = zero_free_diagonal_permutation(sys.a);
        sys.a = std::move(zfd.matrix);
        if (!sys.b.empty()) sys.b = permute_vector(sys.b, zfd.permutation);
        sys.applied = std::move(zfd.permutation);
    }
    return sys;
}

AnalysisReport analyze_system(const std::string& path, const LoadedSystem& sys, double factor) {
    const auto profile = density_profile(sys.a, factor);
    const auto sp = split(sys.a, profile);
    return make_analysis(path, sp, sys.applied ? &*sys.applied : nullptr);
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw InputError("cannot write " + out_path);
    out << text;
    if (!out) throw InputError("error writing " + out_path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse approximate inverse preconditioning for double irregular sparse systems"};
    app.require_subcommand(1);

    const std::vector<std::string> formats{"json", "csv", "text"};

    // analyze
    std::string an_matrix, an_format = "text", an_out;
    double an_factor = 10.0;
    auto* analyze = app.add_subcommand("analyze", "Density statistics and dense line detection");
    analyze->add_option("matrix", an_matrix, "Matrix Market file")->required();
    analyze->add_option("--factor", an_factor, "Dense line threshold factor")->check(CLI::PositiveNumber);
    analyze->add_option("--format", an_format, "Output format")->check(CLI::IsMember(formats));
    analyze->add_option("--out", an_out, "Write the report here instead of stdout");

    // solve
    RunConfig cfg;
    std::string strategy = "psai", pipeline = "transformed", format = "json", out_path;
    std::optional<double> eta;
    std::optional<int> l_max, add_count, dominant_count;
    unsigned threads = 0;
    auto* solve = app.add_subcommand("solve", "Precondition and solve A x = b");
    solve->add_option("matrix", cfg.matrix_path, "Matrix Market file")->required();
    solve->add_option("--strategy", strategy, "SAI strategy")->check(CLI::IsMember({"spai", "psai", "rsai"}));
    solve->add_option("--pipeline", pipeline, "Which pipeline(s) to run")
        ->check(CLI::IsMember({"standard", "transformed", "both"}));
    solve->add_option("--eta", eta, "Column residual target");
    solve->add_option("--lmax", l_max, "Maximum pattern augmentation loops");
    solve->add_option("--add-count", add_count, "SPAI: indices added per loop");
    solve->add_option("--dominant-count", dominant_count, "RSAI: dominant residual indices per loop");
    solve->add_option("--eps", cfg.eps, "Relative residual target")->check(CLI::PositiveNumber);
    solve->add_option("--maxit", cfg.max_iter, "BiCGStab iteration limit per system")->check(CLI::NonNegativeNumber);
    solve->add_option("--factor", cfg.factor, "Dense line threshold factor")->check(CLI::PositiveNumber);
    solve->add_option("--rhs", cfg.rhs_mode, "'ones' for b = A*1, or a vector file");
    solve->add_option("--format", format, "Output format")->check(CLI::IsMember(formats));
    solve->add_option("--out", out_path, "Write the report here instead of stdout");
    solve->add_option("--threads", threads, "Preconditioner build threads (0 = all cores)");
    solve->add_option("--seed", cfg.seed, "Seed echoed into the report");

    // generate
    GeneratorParams gp;
    std::string kind = "diag_dominant", gen_out;
    auto* gen = app.add_subcommand("generate", "Write a synthetic double irregular matrix");
    gen->add_option("--n", gp.n, "Order")->required();
    gen->add_option("--p", gp.p, "Entries per column of the banded base")->required();
    gen->add_option("--s1", gp.s1, "Number of dense columns")->required();
    gen->add_option("--s2", gp.s2, "Number of dense rows")->required();
    gen->add_option("--seed", gp.seed, "Random seed")->required();
    gen->add_option("--out", gen_out, "Output .mtx path (metadata goes to PATH.json)")->required();
    gen->add_option("--kind", kind, "Base construction")->check(CLI::IsMember({"diag_dominant", "random_spd_like"}));
    gen->add_option("--margin", gp.margin, "Diagonal dominance margin");
    gen->add_option("--fill", gp.fill, "Fraction of n filled in each dense line");
    gen->add_option("--factor", gp.factor, "Dense line threshold factor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInputError;
    }

    try {
        if (*analyze) {
            const auto sys = load(an_matrix, "");
            const auto rep = analyze_system(an_matrix, sys, an_factor);
            emit(render_analysis(rep, parse_output_format(an_format)), an_out);
            return kOk;
        }

        if (*solve) {
            cfg.pipeline = parse_pipeline(pipeline);
            cfg.format = parse_output_format(format);
            cfg.sai = SaiParams::defaults(parse_strategy(strategy));
            if (eta) cfg.sai.eta = *eta;
            if (l_max) cfg.sai.l_max = *l_max;
            if (add_count) cfg.sai.add_count = *add_count;
            if (dominant_count) cfg.sai.dominant_count = *dominant_count;
            cfg.sai.threads = threads;
            cfg.sai.validate();

            const auto sys = load(cfg.matrix_path, cfg.rhs_mode);
            const auto analysis = analyze_system(cfg.matrix_path, sys, cfg.factor);

            SolveOptions opts;
            opts.sai = cfg.sai;
            opts.eps = cfg.eps;
            opts.max_iter = cfg.max_iter;
            opts.factor = cfg.factor;

            std::vector<SolveReport> runs;
            if (cfg.pipeline != Pipeline::transformed) runs.push_back(solve_standard(sys.a, sys.b, opts).report);
            if (cfg.pipeline != Pipeline::standard) runs.push_back(solve_irregular(sys.a, sys.b, opts).report);
            emit(render_solve(cfg, analysis, runs, cfg.format), out_path);

            int rc = kOk;
            for (const auto& r : runs) {
                if (r.converged) continue;
                rc = std::max(rc, r.breakdown ? int(kNumericalError) : int(kNotConverged));
            }
            return rc;
        }

        if (*gen) {
            gp.kind = parse_generator_kind(kind);
            const auto g = generate(gp);
            char comment[256];
            std::snprintf(comment, sizeof comment, " generated: n=%d p=%d s1=%d s2=%d kind=%s seed=%llu", gp.n, gp.p,
                          gp.s1, gp.s2, std::string(to_string(gp.kind)).c_str(),
                          static_cast<unsigned long long>(gp.seed));
            write_matrix_market(gen_out, g.a, comment);

            nlohmann::ordered_json meta;
            meta["report_version"] = kReportVersion;
            meta["command"] = "generate";
            meta["matrix"] = gen_out;
            meta["params"] = {{"n", gp.n},           {"p", gp.p},
                              {"s1", gp.s1},         {"s2", gp.s2},
                              {"kind", to_string(gp.kind)}, {"seed", gp.seed},
                              {"margin", gp.margin}, {"fill", gp.fill},
                              {"factor", gp.factor}};
            meta["nnz"] = g.a.nnz();
            nlohmann::ordered_json cols = nlohmann::ordered_json::array(), rows = nlohmann::ordered_json::array();
            for (Index j : g.dense_cols) cols.push_back(j + 1);
            for (Index i : g.dense_rows) rows.push_back(i + 1);
            meta["dense_cols"] = cols;
            meta["dense_rows"] = rows;
            emit(meta.dump(2) + "\n", gen_out + ".json");
            std::cout << "wrote " << gen_out << " (n=" << gp.n << ", nnz=" << g.a.nnz() << ") and " << gen_out
                      << ".json\n";
            return kOk;
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kOk;
}
