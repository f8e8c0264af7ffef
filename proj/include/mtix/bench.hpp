#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "mtix/codecs.hpp"
#include "mtix/error.hpp"
#include "mtix/factorizer.hpp"
#include "mtix/index_store.hpp"
#include "mtix/query.hpp"

namespace mtix {

/// One row of the size/quality trade-off table.
struct BenchRow {
    Payload theta = 0;
    std::size_t nnz = 0;
    IndexStats stats;
    /// Mean overlap@k against the unpruned results; nullopt with no queries.
    std::optional<double> mean_overlap;
};

/// Prunes V at each threshold, factors the result and compares query results
/// against the unpruned matrix. `thetas` must be ascending.
[[nodiscard]] inline auto run_bench(TermDocMatrix const& v, std::vector<Payload> const& thetas,
                                    std::vector<Query> const& queries, CodecConfig const& cfg,
                                    FactorParams const& params) -> std::vector<BenchRow> {
    if (!std::is_sorted(thetas.begin(), thetas.end())) {
        throw ValidationError("theta list must be ascending");
    }
    std::vector<std::vector<TermId>> resolved;
    std::vector<std::vector<ScoredDoc>> baseline;
    resolved.reserve(queries.size());
    for (auto const& q : queries) {
        resolved.push_back(resolve_terms(v.lexicon, q));
        baseline.push_back(top_k(v, resolved.back(), q.k));
    }

    std::vector<BenchRow> rows;
    for (auto theta : thetas) {
        auto pruned = prune(v, theta);
        auto f = factor(pruned, params);
        BenchRow row;
        row.theta = theta;
        row.nnz = nnz(pruned);
        row.stats = stats(pruned, f, cfg);
        if (!queries.empty()) {
            double sum = 0;
            for (std::size_t i = 0; i < queries.size(); ++i) {
                auto got = top_k(f, resolved[i], queries[i].k);
                sum += overlap_at_k(baseline[i], got, queries[i].k);
            }
            row.mean_overlap = sum / static_cast<double>(queries.size());
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mtix
