#include "irsai/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "irsai/error.hpp"

namespace irsai {

namespace {

using nlohmann::ordered_json;

ordered_json one_based(const std::vector<Index>& idx) {
    ordered_json out = ordered_json::array();
    for (Index i : idx) out.push_back(i + 1);
    return out;
}

// JSON has no infinities; an unbounded target is written as null.
ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

ordered_json analysis_json(const AnalysisReport& r) {
    ordered_json j;
    j["n"] = r.n;
    j["nnz"] = r.nnz;
    j["p"] = r.p;
    j["factor"] = r.factor;
    j["threshold"] = r.threshold;
    j["s1"] = r.s1;
    j["s2"] = r.s2;
    j["p_dc"] = r.p_dc;
    j["p_dr"] = r.p_dr;
    j["nnz_hat"] = r.nnz_hat;
    j["nu"] = r.nu;
    j["dense_cols"] = one_based(r.dense_cols);
    j["dense_rows"] = one_based(r.dense_rows);
    j["permuted"] = r.permuted;
    j["permutation"] = r.permuted ? one_based(r.permutation) : ordered_json(nullptr);
    return j;
}

ordered_json config_json(const RunConfig& c) {
    ordered_json j;
    j["rhs"] = c.rhs_mode;
    j["strategy"] = to_string(c.sai.strategy);
    j["eta"] = c.sai.eta;
    j["l_max"] = c.sai.l_max;
    j["add_count"] = c.sai.add_count;
    j["dominant_count"] = c.sai.dominant_count;
    j["drop_enabled"] = c.sai.drop_enabled;
    j["eps"] = c.eps;
    j["max_iter"] = c.max_iter;
    j["factor"] = c.factor;
    j["pipeline"] = to_string(c.pipeline);
    j["seed"] = c.seed;
    return j;
}

ordered_json run_json(const SolveReport& r) {
    ordered_json j;
    j["pipeline"] = r.pipeline;
    j["strategy"] = to_string(r.strategy);
    j["n"] = r.n;
    j["nnz"] = r.nnz;
    j["nnz_precond"] = r.nnz_precond;
    j["s1"] = r.s1;
    j["s2"] = r.s2;
    j["nu"] = r.nu;
    j["spar"] = r.spar;
    j["n_c"] = r.n_c;
    j["ptime"] = r.ptime_seconds;
    j["stime"] = r.stime_seconds;
    j["split_time"] = r.split_seconds;
    j["iter"] = r.max_iter;
    j["iter_limit"] = r.iter_limit;
    j["per_system_iters"] = r.per_system_iters;
    ordered_json res = ordered_json::array();
    for (double v : r.per_system_rel_residuals) res.push_back(finite_or_null(v));
    j["per_system_rel_residuals"] = res;
    ordered_json tgt = ordered_json::array();
    for (double v : r.per_system_targets) tgt.push_back(finite_or_null(v));
    j["per_system_targets"] = tgt;
    j["eps"] = r.eps;
    j["r_actual"] = finite_or_null(r.r_actual);
    j["a"] = finite_or_null(r.a_ratio);
    j["converged"] = r.converged;
    j["breakdown"] = r.breakdown ? ordered_json(*r.breakdown) : ordered_json(nullptr);
    if (r.tolerances) {
        const auto& t = *r.tolerances;
        j["tolerances"] = {{"tol_z", t.tol_z},
                           {"tol_p", t.tol_p ? finite_or_null(*t.tol_p) : ordered_json(nullptr)},
                           {"tol_q", t.tol_q ? finite_or_null(*t.tol_q) : ordered_json(nullptr)},
                           {"c0", t.c0},
                           {"c1", t.c1},
                           {"c2", t.c2}};
    } else {
        j["tolerances"] = nullptr;
    }
    if (r.exact_constants) {
        const auto& c = *r.exact_constants;
        j["exact_constants"] = {{"c0", c.c0}, {"c1", c.c1}, {"c2", c.c2}};
    } else {
        j["exact_constants"] = nullptr;
    }
    j["capped_columns"] = r.capped_columns;
    j["stagnated_columns"] = r.stagnated_columns;
    return j;
}

ordered_json legend_row(const SolveReport& r) {
    return {{"spar", r.spar},          {"ptime", r.ptime_seconds}, {"n_c", r.n_c},
            {"a", finite_or_null(r.a_ratio)}, {"iter", r.max_iter}, {"stime", r.stime_seconds}};
}

} // namespace

OutputFormat parse_output_format(std::string_view name) {
    if (name == "json") return OutputFormat::json;
    if (name == "csv") return OutputFormat::csv;
    if (name == "text") return OutputFormat::text;
    throw InputError("unknown output format '" + std::string(name) + "'");
}

Pipeline parse_pipeline(std::string_view name) {
    if (name == "standard") return Pipeline::standard;
    if (name == "transformed") return Pipeline::transformed;
    if (name == "both") return Pipeline::both;
    throw InputError("unknown pipeline '" + std::string(name) + "'");
}

std::string_view to_string(OutputFormat f) {
    switch (f) {
    case OutputFormat::json: return "json";
    case OutputFormat::csv: return "csv";
    case OutputFormat::text: return "text";
    }
    return "json";
}

std::string_view to_string(Pipeline p) {
    switch (p) {
    case Pipeline::standard: return "standard";
    case Pipeline::transformed: return "transformed";
    case Pipeline::both: return "both";
    }
    return "transformed";
}

AnalysisReport make_analysis(std::string matrix, const IrregularSplit& sp, const Permutation* applied) {
    AnalysisReport r;
    r.matrix = std::move(matrix);
    const auto& prof = sp.profile;
    r.n = prof.n;
    r.nnz = prof.nnz;
    r.p = prof.p;
    r.factor = prof.factor;
    r.threshold = prof.threshold();
    r.s1 = sp.s1();
    r.s2 = sp.s2();
    r.p_dc = prof.p_dc;
    r.p_dr = prof.p_dr.value_or(0);
    r.nnz_hat = sp.a_hat.nnz();
    r.nu = sp.nu;
    r.dense_cols = sp.dense_col_idx;
    r.dense_rows = sp.dense_row_idx;
    if (applied && !applied->is_identity()) {
        r.permuted = true;
        r.permutation = applied->perm;
    }
    return r;
}

std::string render_analysis(const AnalysisReport& r, OutputFormat f) {
    std::ostringstream out;
    switch (f) {
    case OutputFormat::json: {
        ordered_json j;
        j["report_version"] = kReportVersion;
        j["command"] = "analyze";
        j["matrix"] = r.matrix;
        j["analysis"] = analysis_json(r);
        out << j.dump(2) << '\n';
        break;
    }
    case OutputFormat::csv:
        out << "matrix,n,nnz,p,s1,s2,p_dc,p_dr,nnz_hat,nu,permuted\n";
        out << r.matrix << ',' << r.n << ',' << r.nnz << ',' << r.p << ',' << r.s1 << ',' << r.s2 << ',' << r.p_dc
            << ',' << r.p_dr << ',' << r.nnz_hat << ',' << num(r.nu) << ',' << (r.permuted ? "yes" : "no") << '\n';
        break;
    case OutputFormat::text: {
        auto list = [](const std::vector<Index>& idx) {
            std::string s;
            for (Index i : idx) s += (s.empty() ? "" : " ") + std::to_string(i + 1);
            return s.empty() ? std::string("-") : s;
        };
        out << "matrix      " << r.matrix << '\n'
            << "n           " << r.n << '\n'
            << "nnz         " << r.nnz << '\n'
            << "p           " << r.p << " (dense above " << num(r.threshold) << ")\n"
            << "s1          " << r.s1 << '\n'
            << "s2          " << r.s2 << '\n'
            << "p_dc        " << r.p_dc << '\n'
            << "p_dr        " << r.p_dr << '\n'
            << "nnz(A_hat)  " << r.nnz_hat << '\n'
            << "nu          " << num(r.nu) << '\n'
            << "dense cols  " << list(r.dense_cols) << '\n'
            << "dense rows  " << list(r.dense_rows) << '\n'
            << "permuted    " << (r.permuted ? "yes" : "no") << '\n';
        break;
    }
    }
    return out.str();
}

std::string render_solve(const RunConfig& cfg, const AnalysisReport& analysis, const std::vector<SolveReport>& runs,
                         OutputFormat f) {
    std::ostringstream out;
    switch (f) {
    case OutputFormat::json: {
        ordered_json j;
        j["report_version"] = kReportVersion;
        j["command"] = "solve";
        j["matrix"] = cfg.matrix_path;
        j["config"] = config_json(cfg);
        j["analysis"] = analysis_json(analysis);
        ordered_json arr = ordered_json::array();
        for (const auto& r : runs) arr.push_back(run_json(r));
        j["runs"] = arr;
        if (runs.size() == 2) {
            j["comparison"] = {{runs[0].pipeline, legend_row(runs[0])}, {runs[1].pipeline, legend_row(runs[1])}};
        } else {
            j["comparison"] = nullptr;
        }
        out << j.dump(2) << '\n';
        break;
    }
    case OutputFormat::csv:
        out << "matrix,pipeline,strategy,n,nnz,s1,s2,spar,ptime,n_c,a,iter,stime,r_actual,converged\n";
        for (const auto& r : runs) {
            out << cfg.matrix_path << ',' << r.pipeline << ',' << to_string(r.strategy) << ',' << r.n << ',' << r.nnz
                << ',' << r.s1 << ',' << r.s2 << ',' << num(r.spar) << ',' << num(r.ptime_seconds) << ',' << r.n_c
                << ',' << num(r.a_ratio) << ',' << r.max_iter << ',' << num(r.stime_seconds) << ','
                << num(r.r_actual) << ',' << (r.converged ? "true" : "false") << '\n';
        }
        break;
    case OutputFormat::text: {
        char line[256];
        out << "matrix " << cfg.matrix_path << "  n=" << analysis.n << " nnz=" << analysis.nnz
            << " s1=" << analysis.s1 << " s2=" << analysis.s2 << (analysis.permuted ? " (row permuted)" : "")
            << '\n';
        std::snprintf(line, sizeof line, "%-12s %-8s %8s %10s %6s %10s %6s %10s %s\n", "pipeline", "strategy",
                      "spar", "ptime", "n_c", "a", "iter", "stime", "converged");
        out << line;
        for (const auto& r : runs) {
            std::snprintf(line, sizeof line, "%-12s %-8s %8.3f %10.4f %6d %10.3g %6d %10.4f %s\n",
                          r.pipeline.c_str(), std::string(to_string(r.strategy)).c_str(), r.spar, r.ptime_seconds,
                          r.n_c, r.a_ratio, r.max_iter, r.stime_seconds, r.converged ? "yes" : "no");
            out << line;
            if (r.breakdown) out << "  breakdown: " << *r.breakdown << '\n';
        }
        break;
    }
    }
    return out.str();
}

} // namespace irsai
