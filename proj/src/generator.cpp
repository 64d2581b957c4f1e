#include "irsai/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <unordered_map>

#include "irsai/density.hpp"
#include "irsai/error.hpp"

namespace irsai {

namespace {

using Rng = std::mt19937_64;

std::uint64_t key(Index i, Index j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(j)) << 32) | static_cast<std::uint32_t>(i);
}

double off_value(Rng& rng) {
    std::uniform_real_distribution<double> mag(0.1, 1.0);
    std::bernoulli_distribution neg(0.5);
    const double v = mag(rng);
    return neg(rng) ? -v : v;
}

std::vector<Index> sample_indices(Rng& rng, Index n, Index count) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(count));
    std::sort(all.begin(), all.end());
    return all;
}

class Builder {
public:
    explicit Builder(bool symmetric) : symmetric_(symmetric) {}

    void put(Index i, Index j, double v) {
        if (i == j) return;
        if (entries_.emplace(key(i, j), v).second) order_.push_back({i, j, v});
        if (symmetric_ && entries_.emplace(key(j, i), v).second) order_.push_back({j, i, v});
    }

    const std::vector<Triplet>& triplets() const { return order_; }

private:
    bool symmetric_;
    std::unordered_map<std::uint64_t, double> entries_;
    std::vector<Triplet> order_;
};

} // namespace

std::string_view to_string(GeneratorKind k) {
    return k == GeneratorKind::diag_dominant ? "diag_dominant" : "random_spd_like";
}

GeneratorKind parse_generator_kind(std::string_view name) {
    if (name == "diag_dominant") return GeneratorKind::diag_dominant;
    if (name == "random_spd_like") return GeneratorKind::random_spd_like;
    throw InputError("unknown generator kind '" + std::string(name) + "'");
}

void GeneratorParams::validate() const {
    if (n < 1) throw InputError("n must be positive");
    if (p < 1 || p > n) throw InputError("p must lie in [1, n]");
    if (s1 < 0 || s2 < 0 || s1 > n || s2 > n) throw InputError("s1 and s2 must lie in [0, n]");
    if (kind == GeneratorKind::random_spd_like && s1 != s2)
        throw InputError("random_spd_like needs s1 == s2");
    if (!(margin > 0.0)) throw InputError("margin must be positive");
    if (!(fill > 0.0 && fill <= 1.0)) throw InputError("fill must lie in (0, 1]");
    if (!(factor > 0.0)) throw InputError("factor must be positive");
}

GeneratedMatrix generate(const GeneratorParams& gp) {
    gp.validate();
    const Index n = gp.n;
    const bool symmetric = gp.kind == GeneratorKind::random_spd_like;
    Rng rng(gp.seed);
    Builder b(symmetric);

    // Banded base: p - 1 distinct off-diagonal rows per column within
    // distance p of the diagonal.
    const Index band = gp.p;
    for (Index j = 0; j < n; ++j) {
        std::vector<Index> offsets;
        for (Index d = -band; d <= band; ++d)
            if (d != 0 && j + d >= 0 && j + d < n) offsets.push_back(d);
        std::shuffle(offsets.begin(), offsets.end(), rng);
        // The symmetric kind mirrors each entry, so it only places half.
        const Index want = symmetric ? gp.p / 2 : gp.p - 1;
        const Index take = std::min<Index>(want, static_cast<Index>(offsets.size()));
        for (Index t = 0; t < take; ++t) b.put(j + offsets[t], j, off_value(rng));
    }

    GeneratedMatrix out;
    out.dense_cols = sample_indices(rng, n, gp.s1);
    out.dense_rows = symmetric ? out.dense_cols : sample_indices(rng, n, gp.s2);
    const Index line_len = std::max<Index>(1, static_cast<Index>(std::lround(gp.fill * n)));
    for (Index j : out.dense_cols)
        for (Index i : sample_indices(rng, n, line_len)) b.put(i, j, off_value(rng));
    if (!symmetric)
        for (Index i : out.dense_rows)
            for (Index j : sample_indices(rng, n, line_len)) b.put(i, j, off_value(rng));

    std::vector<double> row_sum(static_cast<std::size_t>(n), 0.0);
    std::vector<double> col_sum(static_cast<std::size_t>(n), 0.0);
    std::vector<Triplet> t = b.triplets();
    for (const auto& e : t) {
        row_sum[e.row] += std::abs(e.value);
        col_sum[e.col] += std::abs(e.value);
    }
    for (Index i = 0; i < n; ++i) {
        const double off = std::max(row_sum[i], col_sum[i]);
        t.push_back({i, i, off > 0.0 ? (1.0 + gp.margin) * off : 1.0});
    }
    out.a = CscMatrix::from_triplets(n, n, t);

    const DensityProfile prof = density_profile(out.a, gp.factor);
    if (prof.dense_cols != out.dense_cols || prof.dense_rows != out.dense_rows) {
        throw InputError("parameter inconsistency: generated matrix has " + std::to_string(prof.dense_cols.size()) +
                         " dense columns and " + std::to_string(prof.dense_rows.size()) +
                         " dense rows (threshold " + std::to_string(prof.threshold()) + "), requested " +
                         std::to_string(gp.s1) + " and " + std::to_string(gp.s2));
    }
    return out;
}

} // namespace irsai
