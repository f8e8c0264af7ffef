// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "mtix/cli.hpp"
#include "mtix/mtix.hpp"
#include "support/synthetic.hpp"

namespace {

using namespace mtix;
using testing::Rng;

/// Collects the first few failure messages of a criterion.
struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, std::string const& what) {
        if (!ok && failures.size() < 5) failures.push_back(what);
    }
    [[nodiscard]] auto passed() const -> bool { return failures.empty(); }
};

// ---- 1: lossless end-to-end ------------------------------------------------

void lossless_end_to_end(Check& c) {
    Rng rng(1001);
    testing::TempDir dir("ac1");
    for (int m = 0; m < 50; ++m) {
        auto v = testing::random_matrix(rng, 200, 1000, 0.01, 15);
        ensure_names(v);
        // odd matrices use a looser stage 2 and other codecs
        FactorParams params;
        CodecConfig codecs;
        if (m % 2 == 1) {
            params.min_cols = 2;
            codecs = CodecConfig{Codec::vbyte, Codec::delta, Codec::vbyte};
        }
        auto path = dir.file("m.mtix");
        save_index(make_index(v, factor(v, params), codecs), path);
        auto loaded = load_index(path);
        c.expect(cells_equal(reconstruct(loaded.factors), v), "matrix " + std::to_string(m) + " not reconstructed");
        for (int q = 0; q < 100; ++q) {
            auto terms = testing::random_query_terms(rng, v.num_terms(), 1, 4);
            c.expect(top_k(loaded.factors, terms, 10) == testing::brute_top_k(v, terms, 10),
                     "matrix " + std::to_string(m) + " query " + std::to_string(q) + " differs");
        }
    }
}

// ---- 2: planted bicluster recovery -----------------------------------------

void planted_recovery(Check& c) {
    Rng rng(2002);
    auto inst = testing::planted_instance(rng, 10, 5, 50, 100, 1000, 0.01);
    auto f = factor_whole_rows(inst.matrix);
    c.expect(cells_equal(reconstruct(f, inst.matrix.num_docs), inst.matrix), "stage 1 output is not exact");

    std::set<std::pair<std::set<TermId>, std::vector<DocId>>> found;
    std::size_t planted_size = 0;
    for (auto const& b : provenance(f)) {
        if (b.rows.size() < 2) continue;
        std::vector<DocId> cols;
        for (auto const& p : b.cols) cols.push_back(p.doc);
        found.emplace(std::set<TermId>(b.rows.begin(), b.rows.end()), cols);
        planted_size += b.size();
    }
    std::set<std::pair<std::set<TermId>, std::vector<DocId>>> planted;
    for (auto const& g : inst.groups) planted.emplace(g.rows, g.cols);
    c.expect(found == planted, "recovered groups differ from the plant (" + std::to_string(found.size()) + " found)");
    c.expect(inst.planted_nnz == 2500, "planted raw nnz " + std::to_string(inst.planted_nnz));
    c.expect(planted_size == 550, "planted factored size " + std::to_string(planted_size));
}

// ---- 3: oracle sandwich ----------------------------------------------------

/// Whole-row multiples: groups with positive gain on private columns, padded with
/// single rows on further private columns, at most 12 non-zeros in total.
auto whole_row_instance(Rng& rng) -> TermDocMatrix {
    static std::vector<std::pair<std::size_t, std::size_t>> const shapes{{2, 3}, {3, 2}, {2, 4}, {4, 2}, {3, 3},
                                                                         {2, 5}, {2, 6}, {3, 4}, {4, 3}};
    std::vector<std::tuple<TermId, DocId, Payload>> cells;
    TermId next_row = 0;
    DocId next_col = 0;
    std::size_t budget = brute_force_max_nnz;
    std::uniform_int_distribution<std::size_t> pick(0, shapes.size() - 1);
    std::uniform_int_distribution<Payload> coeff(1, 6);
    bool first = true;
    while (true) {
        auto [r, k] = shapes[pick(rng)];
        if (r * k > budget) {
            if (!first) break;
            continue;
        }
        first = false;
        auto base = testing::random_primitive_base(rng, k, 9);
        for (std::size_t i = 0; i < r; ++i) {
            auto a = coeff(rng);
            for (std::size_t j = 0; j < k; ++j) cells.emplace_back(next_row, next_col + j, a * base[j]);
            ++next_row;
        }
        next_col += static_cast<DocId>(k);
        budget -= r * k;
        if (budget < 6 || rng() % 2 == 0) break;
    }
    std::uniform_int_distribution<Payload> payload(1, 9);
    while (budget > 0) {
        std::size_t len = 1 + rng() % std::min<std::size_t>(budget, 3);
        for (std::size_t j = 0; j < len; ++j) cells.emplace_back(next_row, next_col + j, payload(rng));
        ++next_row;
        next_col += static_cast<DocId>(len);
        budget -= len;
    }
    return testing::from_cells(cells);
}

void oracle_sandwich(Check& c) {
    Rng rng(3003);
    for (int i = 0; i < 200; ++i) {
        auto v = testing::tiny_matrix(rng, 10);
        auto f = factor(v);
        auto greedy = total_size(f);
        auto best = brute_force_optimal(v);
        std::size_t nonempty = 0;
        for (auto const& row : v.rows) nonempty += row.empty() ? 0 : 1;
        c.expect(best <= greedy, "random " + std::to_string(i) + ": oracle " + std::to_string(best) + " > greedy " +
                                     std::to_string(greedy));
        c.expect(greedy <= nonempty + nnz(v), "random " + std::to_string(i) + ": greedy above T + nnz");
    }
    for (int i = 0; i < 50; ++i) {
        auto v = whole_row_instance(rng);
        auto greedy = total_size(factor(v));
        auto best = brute_force_optimal(v);
        c.expect(greedy == best, "whole-row instance " + std::to_string(i) + ": greedy " + std::to_string(greedy) +
                                     " vs oracle " + std::to_string(best));
    }
}

// ---- 4: codec conformance --------------------------------------------------

void codec_conformance(Check& c) {
    std::ifstream in(MTIX_DATA_DIR "/codec_vectors.tsv");
    c.expect(static_cast<bool>(in), "codec_vectors.tsv missing");
    std::string line;
    std::size_t vectors = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::uint64_t value = 0;
        std::string name;
        std::string expected;
        fields >> value >> name >> expected;
        auto codec = parse_codec(name);
        BitWriter w;
        write_value(w, codec, value);
        std::string got;
        if (codec == Codec::vbyte) {
            char hex[3];
            for (auto b : w.bytes()) {
                std::snprintf(hex, sizeof hex, "%02x", b);
                got += hex;
            }
        } else {
            got = w.to_bitstring();
        }
        c.expect(got == expected, name + " " + std::to_string(value) + ": " + got + " != " + expected);
        ++vectors;
    }
    c.expect(vectors > 0, "no conformance vectors read");

    Rng rng(4004);
    std::vector<std::uint64_t> random(100000);
    for (auto& x : random) x = rng() >> (rng() % 64);

    auto round_trip = [&](Codec codec, std::uint64_t lo) {
        BitWriter w;
        std::vector<std::uint64_t> values;
        for (std::uint64_t x = lo; x <= (std::uint64_t{1} << 20); ++x) values.push_back(x);
        for (auto x : random) values.push_back(std::max(x, lo));
        for (auto x : values) {
            auto before = w.bit_size();
            write_value(w, codec, x);
            if (codec == Codec::gamma && w.bit_size() - before != 2 * std::size_t{floor_log2(x)} + 1) {
                c.expect(false, "gamma length law fails at " + std::to_string(x));
            }
        }
        BitReader r(w.bytes(), w.bit_size());
        for (auto x : values) {
            if (read_value(r, codec) != x) {
                c.expect(false, std::string(to_string(codec)) + " round trip fails at " + std::to_string(x));
                return;
            }
        }
        c.expect(r.remaining() == 0, std::string(to_string(codec)) + " stream has trailing bits");
    };
    round_trip(Codec::vbyte, 0);
    round_trip(Codec::gamma, 1);
    round_trip(Codec::delta, 1);
}

// ---- 5: pruning sweep ------------------------------------------------------

void pruning_sweep(Check& c) {
    Rng rng(5005);
    auto v = testing::random_matrix(rng, 300, 2000, 0.02, 40);
    std::vector<Payload> payloads;
    for (auto const& row : v.rows) {
        for (auto const& p : row.postings) payloads.push_back(p.payload);
    }
    std::sort(payloads.begin(), payloads.end());
    auto nearest_rank = [&](double pct) {
        auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(payloads.size())));
        return payloads[std::max<std::size_t>(rank, 1) - 1];
    };
    std::vector<Payload> thetas{1, nearest_rank(25), nearest_rank(50), nearest_rank(75), payloads.back() + 1};

    std::vector<Query> queries;
    for (int i = 0; i < 200; ++i) {
        Query q;
        for (auto t : testing::random_query_terms(rng, v.num_terms(), 1, 4)) q.terms.push_back(v.lexicon.name(t));
        queries.push_back(q);
    }
    auto rows = run_bench(v, thetas, queries, CodecConfig{}, FactorParams{});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        c.expect(rows[i].nnz <= rows[i - 1].nnz, "nnz grows at theta " + std::to_string(rows[i].theta));
        c.expect(rows[i].stats.bytes_factored <= rows[i - 1].stats.bytes_factored,
                 "factored bytes grow at theta " + std::to_string(rows[i].theta));
    }
    c.expect(rows.front().mean_overlap == 1.0, "overlap@10 at theta 1 is not 1.0");
    c.expect(rows.back().nnz == 0, "theta max+1 leaves postings");

    auto empty = factor(prune(v, thetas.back()));
    for (auto const& q : queries) {
        c.expect(top_k(empty, v.lexicon, q).empty(), "theta max+1 returns results");
    }
}

// ---- 6: remainder diagnostic -----------------------------------------------

auto cli_field(std::string const& out, std::string const& key) -> std::string {
    std::istringstream lines(out);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind(key + '\t', 0) == 0) return line.substr(key.size() + 1);
    }
    return "";
}

void remainder_diagnostic(Check& c) {
    testing::TempDir dir("ac6");
    Rng rng(6006);
    auto inst = testing::planted_instance(rng, 4, 4, 12, 60, 300, 0.03);
    auto corpus = dir.file("corpus.tsv");
    testing::write_corpus(inst.matrix, corpus);
    std::ostringstream out;
    std::ostringstream err;
    auto code = cli::run({"factor", corpus, "--w-out", dir.file("w.txt"), "--h-out", dir.file("h.txt"), "--v-out",
                          dir.file("v.txt")},
                         out, err);
    c.expect(code == 0, "factor failed: " + err.str());
    out.str("");
    code = cli::run({"diag-remainder", dir.file("v.txt"), dir.file("w.txt"), dir.file("h.txt"),
                     "--tsv"},
                    out, err);
    c.expect(code == 0, "diag-remainder failed: " + err.str());
    c.expect(cli_field(out.str(), "nnz_R") == "0", "own factors leave nnz_R = " + cli_field(out.str(), "nnz_R"));

    std::ofstream(dir.file("v3.txt")) << "0 0 1\n1 1 1\n2 2 1\n";
    std::ofstream(dir.file("w3.txt")) << "0 0 1\n1 0 1\n2 0 1\n";
    std::ofstream(dir.file("h3.txt")) << "0 0 1\n0 1 1\n0 2 1\n";
    out.str("");
    code = cli::run({"diag-remainder", dir.file("v3.txt"), dir.file("w3.txt"),
                     dir.file("h3.txt"), "--tsv"},
                    out, err);
    c.expect(code == 0, "diag-remainder failed: " + err.str());
    c.expect(cli_field(out.str(), "nnz_V") == "3", "3x3 nnz_V = " + cli_field(out.str(), "nnz_V"));
    c.expect(cli_field(out.str(), "nnz_R") == "6", "3x3 nnz_R = " + cli_field(out.str(), "nnz_R"));
    c.expect(cli_field(out.str(), "r_larger_than_v") == "yes", "3x3 remainder not reported larger than V");
}

// ---- 7: determinism --------------------------------------------------------

void determinism(Check& c) {
    testing::TempDir dir("ac7");
    Rng rng(7007);
    auto v = testing::partial_block_matrix(rng, 400, 600, 120);
    FactorParams p;
    p.min_cols = 3;
    c.expect(total_size(factor(v, p)) < total_size(factor_whole_rows(v)), "corpus exercises no partial biclusters");
    auto corpus = dir.file("corpus.tsv");
    testing::write_corpus(v, corpus);

    auto hw = std::max(2U, std::thread::hardware_concurrency());
    std::vector<std::string> thread_counts{"1", "1", "3", "8", std::to_string(hw), "0"};
    std::vector<std::uint64_t> hashes;
    for (std::size_t i = 0; i < thread_counts.size(); ++i) {
        auto path = dir.file("run" + std::to_string(i) + ".mtix");
        std::ostringstream out;
        std::ostringstream err;
        auto code = cli::run({"build", corpus, "-o", path, "--min-cols", "3", "--threads", thread_counts[i]}, out, err);
        c.expect(code == 0, "build failed: " + err.str());
        hashes.push_back(testing::fnv1a(read_file_bytes(path)));
    }
    for (std::size_t i = 1; i < hashes.size(); ++i) {
        c.expect(hashes[i] == hashes[0], "build with --threads " + thread_counts[i] + " differs");
    }
}

struct Criterion {
    int id;
    std::string name;
    double limit_s;
    std::function<void(Check&)> run;
};

}  // namespace

int main() {
    std::vector<Criterion> criteria{
        {1, "lossless build/save/load/reconstruct and top-k", 60, lossless_end_to_end},
        {2, "planted bicluster recovery (550 vs 2500)", 5, planted_recovery},
        {3, "oracle sandwich and whole-row optimality", 120, oracle_sandwich},
        {4, "codec conformance and exhaustive round trips", 30, codec_conformance},
        {5, "pruning sweep monotonicity and overlap", 0, pruning_sweep},
        {6, "remainder diagnostic", 0, remainder_diagnostic},
        {7, "byte-identical builds across thread counts", 0, determinism},
    };
    int failed = 0;
    for (auto const& crit : criteria) {
        Check check;
        auto start = std::chrono::steady_clock::now();
        try {
            crit.run(check);
        } catch (std::exception const& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (crit.limit_s > 0 && secs > crit.limit_s) {
            check.failures.push_back("runtime " + std::to_string(secs) + " s exceeds " +
                                     std::to_string(static_cast<int>(crit.limit_s)) + " s");
        }
        std::printf("[%s] AC%d %s (%.2f s", check.passed() ? "PASS" : "FAIL", crit.id, crit.name.c_str(), secs);
        if (crit.limit_s > 0) std::printf(", limit %.0f s", crit.limit_s);
        std::printf(")\n");
        for (auto const& f : check.failures) std::printf("       %s\n", f.c_str());
        failed += check.passed() ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
