#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mtix/error.hpp"
#include "mtix/factorizer.hpp"
#include "mtix/matrix.hpp"

namespace mtix {

struct Query {
    std::vector<std::string> terms;
    std::size_t k = 10;
};

struct ScoredDoc {
    DocId doc = 0;
    std::uint64_t score = 0;

    friend auto operator==(ScoredDoc const&, ScoredDoc const&) -> bool = default;
};

/// Row t of W * H as a posting list. Equal to row t of the factored matrix.
[[nodiscard]] inline auto expand_term(Factorization const& f, TermId t) -> PostingList {
    return {t, expand_row(f, t)};
}

/// Resolves query terms through the lexicon. Unknown terms go to `dropped` when given.
[[nodiscard]] inline auto resolve_terms(Lexicon const& lexicon, Query const& q,
                                        std::vector<std::string>* dropped = nullptr) -> std::vector<TermId> {
    std::vector<TermId> ids;
    for (auto const& term : q.terms) {
        if (auto id = lexicon.find(term)) {
            ids.push_back(*id);
        } else if (dropped != nullptr) {
            dropped->push_back(term);
        }
    }
    return ids;
}

namespace detail {

/// Additive impact scoring: score(d) = sum over the query's terms of payload(t, d).
/// A term repeated in the query contributes once per occurrence.
template <typename RowOf>
auto accumulate_top_k(std::span<TermId const> terms, std::size_t num_docs, std::size_t k, RowOf&& row_of)
    -> std::vector<ScoredDoc> {
    if (k == 0) {
        throw DomainError("k must be at least 1");
    }
    std::vector<std::uint64_t> acc(num_docs, 0);
    std::vector<DocId> touched;
    for (auto t : terms) {
        for (auto const& p : row_of(t)) {
            if (acc[p.doc] == 0) {
                touched.push_back(p.doc);
            }
            acc[p.doc] += p.payload;
        }
    }
    std::vector<ScoredDoc> results;
    results.reserve(touched.size());
    for (auto d : touched) {
        results.push_back({d, acc[d]});
    }
    auto better = [](ScoredDoc const& a, ScoredDoc const& b) {
        return a.score != b.score ? a.score > b.score : a.doc < b.doc;
    };
    auto keep = std::min(k, results.size());
    std::partial_sort(results.begin(), results.begin() + static_cast<std::ptrdiff_t>(keep), results.end(), better);
    results.resize(keep);
    return results;
}

}  // namespace detail

/// Top-k over the factored index, expanding each query term through W * H.
[[nodiscard]] inline auto top_k(Factorization const& f, std::span<TermId const> terms, std::size_t k)
    -> std::vector<ScoredDoc> {
    return detail::accumulate_top_k(terms, f.num_docs, k, [&](TermId t) { return expand_row(f, t); });
}

[[nodiscard]] inline auto top_k(Factorization const& f, Lexicon const& lexicon, Query const& q)
    -> std::vector<ScoredDoc> {
    auto ids = resolve_terms(lexicon, q);
    return top_k(f, ids, q.k);
}

/// Top-k directly over the raw matrix.
[[nodiscard]] inline auto top_k(TermDocMatrix const& v, std::span<TermId const> terms, std::size_t k)
    -> std::vector<ScoredDoc> {
    return detail::accumulate_top_k(terms, v.num_docs, k, [&](TermId t) -> std::vector<Posting> const& {
        if (t >= v.num_terms()) {
            throw LookupError("term id " + std::to_string(t) + " not in matrix");
        }
        return v.rows[t].postings;
    });
}

[[nodiscard]] inline auto top_k(TermDocMatrix const& v, Query const& q) -> std::vector<ScoredDoc> {
    auto ids = resolve_terms(v.lexicon, q);
    return top_k(v, ids, q.k);
}

/// Static pruning: keeps exactly the postings with payload >= theta. Emptied rows stay.
[[nodiscard]] inline auto prune(TermDocMatrix const& v, Payload theta) -> TermDocMatrix {
    TermDocMatrix out;
    out.num_docs = v.num_docs;
    out.lexicon = v.lexicon;
    out.doc_names = v.doc_names;
    out.rows.reserve(v.rows.size());
    for (auto const& row : v.rows) {
        PostingList kept{row.term, {}};
        std::copy_if(row.postings.begin(), row.postings.end(), std::back_inserter(kept.postings),
                     [theta](Posting const& p) { return p.payload >= theta; });
        out.rows.push_back(std::move(kept));
    }
    return out;
}

/// Shared documents among the first k entries of two ranked lists.
///
/// The denominator is the longer of the two truncated lists (at most k), so
/// identical lists score 1 even when fewer than k documents matched. Two empty
/// lists are identical and score 1.
[[nodiscard]] inline auto overlap_at_k(std::span<ScoredDoc const> a, std::span<ScoredDoc const> b, std::size_t k)
    -> double {
    auto na = std::min(k, a.size());
    auto nb = std::min(k, b.size());
    auto denom = std::max(na, nb);
    if (denom == 0) {
        return 1.0;
    }
    std::unordered_set<DocId> docs;
    for (std::size_t i = 0; i < na; ++i) docs.insert(a[i].doc);
    std::size_t shared = 0;
    for (std::size_t i = 0; i < nb; ++i) shared += docs.count(b[i].doc);
    return static_cast<double>(shared) / static_cast<double>(denom);
}

}  // namespace mtix
