#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mtix/error.hpp"
#include "mtix/matrix.hpp"

namespace mtix {

using MetaTermId = std::uint32_t;

/// One row of H: the primitive base vector of a bicluster over its columns.
struct MetaTerm {
    MetaTermId id = 0;
    std::vector<Posting> postings;

    friend auto operator==(MetaTerm const&, MetaTerm const&) -> bool = default;
};

/// One entry of W: term t holds `coeff` copies of meta-term `meta`.
struct Membership {
    MetaTermId meta = 0;
    Payload coeff = 0;

    friend auto operator==(Membership const&, Membership const&) -> bool = default;
};

/// A set of rows whose restriction to `cols` is `coeffs[i] * base` for every row i.
struct Bicluster {
    std::vector<TermId> rows;
    std::vector<Payload> coeffs;
    std::vector<Posting> cols;  // (doc, base payload)

    [[nodiscard]] auto size() const noexcept -> std::size_t { return rows.size() + cols.size(); }

    friend auto operator==(Bicluster const&, Bicluster const&) -> bool = default;
};

/// Exact factorization V = W * H.
///
/// `metaterms` is H, ordered by (lowest member term, lowest doc). `rows[t]` is
/// row t of W, sorted by meta-term id. For each term the column sets of its
/// memberships are pairwise disjoint and together equal the term's support.
struct Factorization {
    std::vector<MetaTerm> metaterms;
    std::vector<std::vector<Membership>> rows;
    std::size_t num_docs = 0;

    [[nodiscard]] auto num_terms() const noexcept -> std::size_t { return rows.size(); }

    [[nodiscard]] auto nnz_w() const noexcept -> std::size_t {
        std::size_t n = 0;
        for (auto const& r : rows) n += r.size();
        return n;
    }

    [[nodiscard]] auto nnz_h() const noexcept -> std::size_t {
        std::size_t n = 0;
        for (auto const& m : metaterms) n += m.postings.size();
        return n;
    }

    friend auto operator==(Factorization const&, Factorization const&) -> bool = default;
};

struct FactorParams {
    /// Minimum number of shared columns for a partial-column candidate. Must be >= 2.
    std::size_t min_cols = 4;
    std::size_t max_candidates_per_term = 64;
    bool enable_stage2 = true;
    /// Unused; the algorithm is deterministic.
    std::uint64_t seed = 0;
    /// Worker threads for candidate generation; 0 picks the hardware concurrency.
    unsigned threads = 1;
};

/// Net reduction in stored non-zeros from collapsing an r x c block into r + c entries.
[[nodiscard]] constexpr auto gain(std::int64_t r, std::int64_t c) noexcept -> std::int64_t {
    return r * c - (r + c);
}

[[nodiscard]] inline auto total_size(Factorization const& f) noexcept -> std::size_t {
    return f.nnz_w() + f.nnz_h();
}

namespace detail {

struct PostingVectorHash {
    auto operator()(std::vector<Posting> const& v) const noexcept -> std::size_t {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&](std::uint64_t x) {
            h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6U) + (h >> 2U);
        };
        for (auto const& p : v) {
            mix(p.doc);
            mix(p.payload);
        }
        return static_cast<std::size_t>(h);
    }
};

inline auto checked_mul(Payload a, Payload b) -> Payload {
    Payload out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw InvariantViolation("payload product overflows 64 bits");
    }
    return out;
}

inline auto singleton(TermId term, std::span<Posting const> cells) -> Bicluster {
    auto prim = primitive_form(cells);
    return Bicluster{{term}, {prim.scale}, std::move(prim.base)};
}

}  // namespace detail

/// Builds a canonical Factorization from an element-disjoint set of biclusters.
[[nodiscard]] inline auto assemble(std::vector<Bicluster> biclusters, std::size_t num_terms,
                                   std::size_t num_docs) -> Factorization {
    std::sort(biclusters.begin(), biclusters.end(), [](Bicluster const& a, Bicluster const& b) {
        return std::pair(a.rows.front(), a.cols.front().doc) < std::pair(b.rows.front(), b.cols.front().doc);
    });
    Factorization f;
    f.num_docs = num_docs;
    f.rows.resize(num_terms);
    f.metaterms.reserve(biclusters.size());
    for (std::size_t m = 0; m < biclusters.size(); ++m) {
        auto& b = biclusters[m];
        auto id = static_cast<MetaTermId>(m);
        for (std::size_t i = 0; i < b.rows.size(); ++i) {
            if (b.rows[i] >= num_terms) {
                throw InvariantViolation("bicluster row " + std::to_string(b.rows[i]) + " out of range");
            }
            f.rows[b.rows[i]].push_back({id, b.coeffs[i]});
        }
        f.metaterms.push_back({id, std::move(b.cols)});
    }
    return f;
}

/// Transposes W back into the originating bicluster of every meta-term.
[[nodiscard]] inline auto provenance(Factorization const& f) -> std::vector<Bicluster> {
    std::vector<Bicluster> out(f.metaterms.size());
    for (std::size_t m = 0; m < f.metaterms.size(); ++m) {
        out[m].cols = f.metaterms[m].postings;
    }
    for (std::size_t t = 0; t < f.rows.size(); ++t) {
        for (auto const& mem : f.rows[t]) {
            if (mem.meta >= out.size()) {
                throw InvariantViolation("W references unknown meta-term " + std::to_string(mem.meta));
            }
            out[mem.meta].rows.push_back(static_cast<TermId>(t));
            out[mem.meta].coeffs.push_back(mem.coeff);
        }
    }
    return out;
}

/// Expands row t of W * H into sorted postings. Throws on overlapping memberships.
[[nodiscard]] inline auto expand_row(Factorization const& f, TermId t) -> std::vector<Posting> {
    if (t >= f.rows.size()) {
        throw LookupError("term id " + std::to_string(t) + " has no W row");
    }
    std::vector<Posting> out;
    for (auto const& mem : f.rows[t]) {
        if (mem.meta >= f.metaterms.size()) {
            throw InvariantViolation("W references unknown meta-term " + std::to_string(mem.meta));
        }
        if (mem.coeff == 0) {
            throw InvariantViolation("zero coefficient in W row " + std::to_string(t));
        }
        for (auto const& p : f.metaterms[mem.meta].postings) {
            out.push_back({p.doc, detail::checked_mul(mem.coeff, p.payload)});
        }
    }
    std::sort(out.begin(), out.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].payload == 0) {
            throw InvariantViolation("zero payload in meta-term expansion");
        }
        if (i > 0 && out[i - 1].doc == out[i].doc) {
            throw InvariantViolation("term " + std::to_string(t) + " has overlapping memberships at doc " +
                                     std::to_string(out[i].doc));
        }
    }
    return out;
}

[[nodiscard]] inline auto reconstruct(Factorization const& f, std::size_t num_docs) -> TermDocMatrix {
    TermDocMatrix v;
    v.num_docs = num_docs;
    v.rows.reserve(f.rows.size());
    for (std::size_t t = 0; t < f.rows.size(); ++t) {
        auto postings = expand_row(f, static_cast<TermId>(t));
        if (!postings.empty() && postings.back().doc >= num_docs) {
            throw InvariantViolation("reconstructed doc id " + std::to_string(postings.back().doc) +
                                     " out of range");
        }
        v.rows.push_back({static_cast<TermId>(t), std::move(postings)});
    }
    return v;
}

[[nodiscard]] inline auto reconstruct(Factorization const& f) -> TermDocMatrix {
    return reconstruct(f, f.num_docs);
}

/// Throws InvariantViolation unless `f` reproduces `v` exactly.
inline void verify_exact(TermDocMatrix const& v, Factorization const& f) {
    if (f.num_terms() != v.num_terms()) {
        throw InvariantViolation("factorization has " + std::to_string(f.num_terms()) + " W rows, matrix has " +
                                 std::to_string(v.num_terms()));
    }
    if (!cells_equal(reconstruct(f, v.num_docs), v)) {
        throw InvariantViolation("W * H does not reproduce V");
    }
}

/// Stage 1: groups rows whose supports and primitive bases coincide.
[[nodiscard]] inline auto factor_whole_rows(TermDocMatrix const& v) -> Factorization {
    struct Group {
        std::vector<TermId> rows;
        std::vector<Payload> coeffs;
    };
    std::vector<std::vector<Posting>> bases;
    std::vector<Group> groups;
    std::unordered_map<std::vector<Posting>, std::size_t, detail::PostingVectorHash> by_base;

    for (auto const& row : v.rows) {
        if (row.empty()) {
            continue;
        }
        auto prim = primitive_form(row);
        auto [it, inserted] = by_base.try_emplace(prim.base, groups.size());
        if (inserted) {
            groups.emplace_back();
            bases.push_back(std::move(prim.base));
        }
        groups[it->second].rows.push_back(row.term);
        groups[it->second].coeffs.push_back(prim.scale);
    }

    std::vector<Bicluster> biclusters;
    biclusters.reserve(v.num_terms());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& group = groups[g];
        auto r = static_cast<std::int64_t>(group.rows.size());
        auto c = static_cast<std::int64_t>(bases[g].size());
        if (r >= 2 && gain(r, c) > 0) {
            biclusters.push_back({std::move(group.rows), std::move(group.coeffs), std::move(bases[g])});
            continue;
        }
        for (std::size_t i = 0; i < group.rows.size(); ++i) {
            biclusters.push_back({{group.rows[i]}, {group.coeffs[i]}, bases[g]});
        }
    }
    return assemble(std::move(biclusters), v.num_terms(), v.num_docs);
}

namespace detail {

/// Cells not yet claimed by a multi-row bicluster, per term.
struct Residual {
    std::vector<std::vector<Posting>> cells;
    std::vector<std::vector<char>> taken;

    [[nodiscard]] auto find(TermId t, DocId d) const -> std::optional<std::size_t> {
        auto const& row = cells[t];
        auto it = std::lower_bound(row.begin(), row.end(), d, [](Posting const& p, DocId doc) { return p.doc < doc; });
        if (it == row.end() || it->doc != d) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - row.begin());
    }
};

struct Candidate {
    std::vector<Posting> cols;  // (doc, primitive base)
    std::vector<TermId> rows;
    std::vector<Payload> coeffs;
    std::int64_t score = 0;
};

/// Max-heap order: higher gain first, then lower first row, then lower first doc.
struct CandidateAfter {
    auto operator()(Candidate const& a, Candidate const& b) const -> bool {
        if (a.score != b.score) return a.score < b.score;
        if (a.rows.front() != b.rows.front()) return a.rows.front() > b.rows.front();
        if (a.cols.front().doc != b.cols.front().doc) return a.cols.front().doc > b.cols.front().doc;
        if (a.cols != b.cols) return a.cols > b.cols;
        return a.rows > b.rows;
    }
};

/// Constant-ratio column classes shared by rows `t` and `u` with at least `min_cols` members.
inline void ratio_classes(std::span<Posting const> a, std::span<Posting const> b, std::size_t min_cols,
                          std::vector<std::vector<Posting>>& out) {
    std::map<std::pair<Payload, Payload>, std::vector<Posting>> classes;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].doc < b[j].doc) {
            ++i;
        } else if (b[j].doc < a[i].doc) {
            ++j;
        } else {
            auto g = std::gcd(a[i].payload, b[j].payload);
            classes[{a[i].payload / g, b[j].payload / g}].push_back(a[i]);
            ++i;
            ++j;
        }
    }
    for (auto& [ratio, cols] : classes) {
        if (cols.size() >= min_cols) {
            auto scale = payload_gcd(cols);
            for (auto& p : cols) {
                p.payload /= scale;
            }
            out.push_back(std::move(cols));
        }
    }
}

/// Candidate column sets seeded by rows t and the partners that share >= min_cols columns with it.
inline auto seed_candidates(Residual const& residual, std::vector<std::vector<TermId>> const& doc_rows, TermId t,
                            FactorParams const& params, std::vector<std::uint32_t>& shared,
                            std::vector<TermId>& touched) -> std::vector<std::vector<Posting>> {
    std::vector<std::vector<Posting>> out;
    auto const& row = residual.cells[t];
    if (row.size() < params.min_cols) {
        return out;
    }
    touched.clear();
    for (auto const& p : row) {
        auto const& rows = doc_rows[p.doc];
        for (auto it = std::upper_bound(rows.begin(), rows.end(), t); it != rows.end(); ++it) {
            if (shared[*it]++ == 0) {
                touched.push_back(*it);
            }
        }
    }
    std::vector<std::pair<std::uint32_t, TermId>> partners;
    for (auto u : touched) {
        if (shared[u] >= params.min_cols) {
            partners.emplace_back(shared[u], u);
        }
        shared[u] = 0;
    }
    std::sort(partners.begin(), partners.end(), [](auto const& a, auto const& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (partners.size() > params.max_candidates_per_term) {
        partners.resize(params.max_candidates_per_term);
    }
    for (auto [count, u] : partners) {
        ratio_classes(row, residual.cells[u], params.min_cols, out);
    }
    return out;
}

/// Every residual row whose restriction to `cols` is an integer multiple of the base.
inline auto extend_rows(Residual const& residual, std::vector<std::vector<TermId>> const& doc_rows,
                        std::vector<Posting> const& cols, Candidate& cand) {
    auto const* smallest = &doc_rows[cols.front().doc];
    for (auto const& c : cols) {
        if (doc_rows[c.doc].size() < smallest->size()) {
            smallest = &doc_rows[c.doc];
        }
    }
    for (auto u : *smallest) {
        auto first = residual.find(u, cols.front().doc);
        if (!first || residual.taken[u][*first] != 0) {
            continue;
        }
        auto value = residual.cells[u][*first].payload;
        if (value % cols.front().payload != 0) {
            continue;
        }
        auto coeff = value / cols.front().payload;
        bool fits = true;
        for (auto const& c : cols) {
            auto at = residual.find(u, c.doc);
            Payload expected = 0;
            if (!at || residual.taken[u][*at] != 0 || __builtin_mul_overflow(coeff, c.payload, &expected) ||
                residual.cells[u][*at].payload != expected) {
                fits = false;
                break;
            }
        }
        if (fits) {
            cand.rows.push_back(u);
            cand.coeffs.push_back(coeff);
        }
    }
    auto r = static_cast<std::int64_t>(cand.rows.size());
    cand.score = gain(r, static_cast<std::int64_t>(cols.size()));
}

}  // namespace detail

/// Stage 2: greedy partial-column biclusters over the cells left in singleton meta-terms.
[[nodiscard]] inline auto refine_partial(TermDocMatrix const& v, Factorization const& f, FactorParams const& params)
    -> Factorization {
    if (params.min_cols < 2) {
        throw ValidationError("min_cols must be at least 2");
    }
    std::vector<Bicluster> kept;
    detail::Residual residual;
    residual.cells.resize(v.num_terms());
    residual.taken.resize(v.num_terms());
    for (auto& b : provenance(f)) {
        if (b.rows.size() >= 2) {
            kept.push_back(std::move(b));
            continue;
        }
        for (auto const& p : b.cols) {
            residual.cells[b.rows.front()].push_back({p.doc, detail::checked_mul(b.coeffs.front(), p.payload)});
        }
    }
    std::vector<std::vector<TermId>> doc_rows(v.num_docs);
    for (std::size_t t = 0; t < residual.cells.size(); ++t) {
        auto& cells = residual.cells[t];
        std::sort(cells.begin(), cells.end());
        residual.taken[t].assign(cells.size(), 0);
        for (auto const& p : cells) {
            doc_rows.at(p.doc).push_back(static_cast<TermId>(t));
        }
    }

    // Seed candidates per term; terms are split into contiguous blocks across workers
    // and the blocks are concatenated in term order, so the outcome is thread-count independent.
    auto num_terms = residual.cells.size();
    unsigned workers = params.threads != 0 ? params.threads : std::max(1U, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(num_terms, 1)));
    std::vector<std::vector<std::vector<Posting>>> seeds(num_terms);
    auto run_block = [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> shared(num_terms, 0);
        std::vector<TermId> touched;
        for (auto t = begin; t < end; ++t) {
            seeds[t] = detail::seed_candidates(residual, doc_rows, static_cast<TermId>(t), params, shared, touched);
        }
    };
    if (workers <= 1) {
        run_block(0, num_terms);
    } else {
        std::vector<std::thread> pool;
        auto block = (num_terms + workers - 1) / workers;
        for (std::size_t begin = 0; begin < num_terms; begin += block) {
            pool.emplace_back(run_block, begin, std::min(num_terms, begin + block));
        }
        for (auto& th : pool) th.join();
    }

    std::priority_queue<detail::Candidate, std::vector<detail::Candidate>, detail::CandidateAfter> queue;
    std::set<std::vector<Posting>> seen;
    for (auto& per_term : seeds) {
        for (auto& cols : per_term) {
            if (!seen.insert(cols).second) {
                continue;
            }
            detail::Candidate cand;
            detail::extend_rows(residual, doc_rows, cols, cand);
            if (cand.rows.size() >= 2 && cand.score > 0) {
                cand.cols = std::move(cols);
                queue.push(std::move(cand));
            }
        }
    }
    seeds.clear();

    while (!queue.empty()) {
        auto cand = queue.top();
        queue.pop();
        detail::Candidate live;
        live.cols = cand.cols;
        for (std::size_t i = 0; i < cand.rows.size(); ++i) {
            auto u = cand.rows[i];
            bool intact = std::all_of(cand.cols.begin(), cand.cols.end(), [&](Posting const& c) {
                auto at = residual.find(u, c.doc);
                return at && residual.taken[u][*at] == 0;
            });
            if (intact) {
                live.rows.push_back(u);
                live.coeffs.push_back(cand.coeffs[i]);
            }
        }
        live.score = gain(static_cast<std::int64_t>(live.rows.size()), static_cast<std::int64_t>(live.cols.size()));
        if (live.rows.size() < 2 || live.score <= 0) {
            continue;
        }
        if (live.rows.size() != cand.rows.size()) {
            queue.push(std::move(live));
            continue;
        }
        for (auto u : live.rows) {
            for (auto const& c : live.cols) {
                residual.taken[u][*residual.find(u, c.doc)] = 1;
            }
        }
        kept.push_back({std::move(live.rows), std::move(live.coeffs), std::move(live.cols)});
    }

    for (std::size_t t = 0; t < residual.cells.size(); ++t) {
        std::vector<Posting> left;
        for (std::size_t i = 0; i < residual.cells[t].size(); ++i) {
            if (residual.taken[t][i] == 0) {
                left.push_back(residual.cells[t][i]);
            }
        }
        if (!left.empty()) {
            kept.push_back(detail::singleton(static_cast<TermId>(t), left));
        }
    }
    auto out = assemble(std::move(kept), v.num_terms(), v.num_docs);
    if (total_size(out) > total_size(f)) {
        return f;
    }
    return out;
}

/// Stage 1 followed by Stage 2 when enabled.
[[nodiscard]] inline auto factor(TermDocMatrix const& v, FactorParams const& params = {}) -> Factorization {
    auto f = factor_whole_rows(v);
    if (params.enable_stage2) {
        f = refine_partial(v, f, params);
    }
    return f;
}

inline constexpr std::size_t brute_force_max_nnz = 12;

/// Minimum total size over every element-disjoint cover of V's non-zeros by valid biclusters.
///
/// Exhaustive dynamic program over subsets of cells; refuses inputs above
/// brute_force_max_nnz non-zeros. Validity is checked by cross-multiplication so
/// it shares no code with the greedy path.
[[nodiscard]] inline auto brute_force_optimal(TermDocMatrix const& v) -> std::size_t {
    struct Cell {
        TermId term;
        DocId doc;
        Payload value;
    };
    std::vector<Cell> cells;
    for (auto const& row : v.rows) {
        for (auto const& p : row.postings) {
            cells.push_back({row.term, p.doc, p.payload});
        }
    }
    auto n = cells.size();
    if (n > brute_force_max_nnz) {
        throw RefusalError("exhaustive search refuses " + std::to_string(n) + " non-zeros (limit " +
                           std::to_string(brute_force_max_nnz) + ")");
    }
    if (n == 0) {
        return 0;
    }
    auto const full = (std::uint32_t{1} << n) - 1;
    constexpr auto invalid = std::numeric_limits<std::uint32_t>::max();

    // cost[s] = |rows| + |cols| if the cell subset s is a valid bicluster, else invalid.
    std::vector<std::uint32_t> cost(full + 1, invalid);
    for (std::uint32_t s = 1; s <= full; ++s) {
        std::vector<TermId> rows;
        std::vector<DocId> cols;
        std::map<std::pair<TermId, DocId>, Payload> at;
        for (std::size_t i = 0; i < n; ++i) {
            if ((s >> i) & 1U) {
                rows.push_back(cells[i].term);
                cols.push_back(cells[i].doc);
                at[{cells[i].term, cells[i].doc}] = cells[i].value;
            }
        }
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        if (rows.size() * cols.size() != at.size()) {
            continue;
        }
        bool proportional = true;
        auto r0 = rows.front();
        auto c0 = cols.front();
        for (auto r : rows) {
            for (auto c : cols) {
                // v[r][c] / v[r0][c] == v[r][c0] / v[r0][c0]
                if (static_cast<unsigned __int128>(at[{r, c}]) * at[{r0, c0}] !=
                    static_cast<unsigned __int128>(at[{r0, c}]) * at[{r, c0}]) {
                    proportional = false;
                }
            }
        }
        if (proportional) {
            cost[s] = static_cast<std::uint32_t>(rows.size() + cols.size());
        }
    }

    std::vector<std::uint32_t> best(full + 1, invalid);
    best[0] = 0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        auto low = mask & (~mask + 1);
        auto rest = mask ^ low;
        // Enumerate subsets of `mask` that contain its lowest cell.
        for (std::uint32_t sub = rest;; sub = (sub - 1) & rest) {
            auto s = sub | low;
            if (cost[s] != invalid && best[mask ^ s] != invalid) {
                best[mask] = std::min(best[mask], best[mask ^ s] + cost[s]);
            }
            if (sub == 0) break;
        }
    }
    return best[full];
}

/// Writes H as "metaterm doc payload" and W as "term metaterm coeff" triples.
inline void export_factors(Factorization const& f, std::ostream& w_out, std::ostream& h_out) {
    for (auto const& m : f.metaterms) {
        for (auto const& p : m.postings) {
            h_out << m.id << ' ' << p.doc << ' ' << p.payload << '\n';
        }
    }
    for (std::size_t t = 0; t < f.rows.size(); ++t) {
        for (auto const& mem : f.rows[t]) {
            w_out << t << ' ' << mem.meta << ' ' << mem.coeff << '\n';
        }
    }
}

}  // namespace mtix
