#include "irsai/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "irsai/error.hpp"

namespace irsai {
namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

enum class Symmetry { general, symmetric, skew };

} // namespace

CscMatrix read_matrix_market(std::istream& in, MatrixMarketOptions opts) {
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) throw ParseError("empty input", 1);
    ++lineno;
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw ParseError("missing %%MatrixMarket banner", lineno);
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix") throw ParseError("unsupported object '" + object + "'", lineno);
    if (format != "coordinate") throw ParseError("only coordinate format is supported", lineno);
    if (field != "real" && field != "integer" && field != "double")
        throw ParseError("unsupported field '" + field + "' (need real or integer)", lineno);
    Symmetry sym;
    if (symmetry == "general") {
        sym = Symmetry::general;
    } else if (symmetry == "symmetric") {
        sym = Symmetry::symmetric;
    } else if (symmetry == "skew-symmetric") {
        sym = Symmetry::skew;
    } else {
        throw ParseError("unsupported symmetry '" + symmetry + "'", lineno);
    }

    // skip comments to the size line
    long long rows = -1, cols = -1, entries = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '%' || blank(line)) continue;
        std::istringstream size_line(line);
        if (!(size_line >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0)
            throw ParseError("malformed size line", lineno);
        break;
    }
    if (rows < 0) throw ParseError("missing size line", lineno);
    if (sym != Symmetry::general && rows != cols)
        throw ParseError("symmetric storage requires a square matrix", lineno);

    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(sym == Symmetry::general ? entries : 2 * entries));
    long long seen = 0;
    while (seen < entries && std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '%' || blank(line)) continue;
        std::istringstream entry(line);
        long long i = 0, j = 0;
        double v = 0.0;
        if (!(entry >> i >> j)) throw ParseError("malformed entry", lineno);
        if (!(entry >> v)) throw ParseError("missing value (pattern matrices are not supported)", lineno);
        std::string extra;
        if (entry >> extra) throw ParseError("unexpected trailing token '" + extra + "'", lineno);
        if (i < 1 || i > rows || j < 1 || j > cols)
            throw ParseError("index (" + std::to_string(i) + ", " + std::to_string(j) +
                                 ") outside declared bounds",
                             lineno);
        const auto r = static_cast<Index>(i - 1);
        const auto c = static_cast<Index>(j - 1);
        trips.push_back({r, c, v});
        if (r != c) {
            if (sym == Symmetry::symmetric) trips.push_back({c, r, v});
            if (sym == Symmetry::skew) trips.push_back({c, r, -v});
        } else if (sym == Symmetry::skew && v != 0.0) {
            throw ParseError("nonzero diagonal in skew-symmetric matrix", lineno);
        }
        ++seen;
    }
    if (seen < entries)
        throw ParseError("expected " + std::to_string(entries) + " entries, found " + std::to_string(seen),
                         lineno);
    return CscMatrix::from_triplets(static_cast<Index>(rows), static_cast<Index>(cols), trips,
                                    opts.drop_zeros);
}

CscMatrix read_matrix_market(const std::filesystem::path& path, MatrixMarketOptions opts) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return read_matrix_market(in, opts);
    } catch (const ParseError& e) {
        throw ParseError(e.reason(), e.line(), path.string());
    }
}

std::vector<double> read_dense_vector(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> out;
    long long expected = -1;
    bool first = true;
    bool array = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (first) {
            first = false;
            if (line.rfind("%%MatrixMarket", 0) == 0) {
                std::istringstream header(line);
                std::string banner, object, format, field;
                header >> banner >> object >> format >> field;
                if (lower(object) != "matrix" || lower(format) != "array")
                    throw ParseError("vector files must use the array format", lineno);
                field = lower(field);
                if (field != "real" && field != "integer" && field != "double")
                    throw ParseError("unsupported field '" + field + "' (need real or integer)", lineno);
                array = true;
                continue;
            }
        }
        if (line.empty() || line[0] == '%' || line[0] == '#' || blank(line)) continue;
        std::istringstream tokens(line);
        if (array && expected < 0) {
            long long rows = -1, cols = -1;
            if (!(tokens >> rows >> cols) || rows < 0 || cols != 1)
                throw ParseError("malformed size line (need 'n 1')", lineno);
            expected = rows;
            out.reserve(static_cast<std::size_t>(rows));
            continue;
        }
        std::string tok;
        while (tokens >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') throw ParseError("malformed number '" + tok + "'", lineno);
            out.push_back(v);
        }
    }
    if (array && expected < 0) throw ParseError("missing size line", lineno);
    if (array && static_cast<long long>(out.size()) != expected)
        throw ParseError("expected " + std::to_string(expected) + " values, found " + std::to_string(out.size()),
                         lineno);
    return out;
}

std::vector<double> read_dense_vector(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return read_dense_vector(in);
    } catch (const ParseError& e) {
        throw ParseError(e.reason(), e.line(), path.string());
    }
}

void write_matrix_market(std::ostream& out, const CscMatrix& a, const std::string& comment) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    if (!comment.empty()) {
        std::istringstream lines(comment);
        std::string l;
        while (std::getline(lines, l)) out << '%' << l << '\n';
    }
    out << a.n_rows() << ' ' << a.n_cols() << ' ' << a.nnz() << '\n';
    char buf[64];
    for (Index j = 0; j < a.n_cols(); ++j) {
        const auto rows = a.col_rows(j);
        const auto vals = a.col_values(j);
        for (std::size_t p = 0; p < rows.size(); ++p) {
            // %.17g round-trips any finite double exactly
            std::snprintf(buf, sizeof buf, "%.17g", vals[p]);
            out << rows[p] + 1 << ' ' << j + 1 << ' ' << buf << '\n';
        }
    }
}

void write_matrix_market(const std::filesystem::path& path, const CscMatrix& a, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    write_matrix_market(out, a, comment);
    if (!out) throw InputError("write failed for " + path.string());
}

} // namespace irsai
