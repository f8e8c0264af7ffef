#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mtix/bench.hpp"
#include "mtix/codecs.hpp"
#include "mtix/error.hpp"
#include "mtix/factorizer.hpp"
#include "mtix/index_store.hpp"
#include "mtix/matrix.hpp"
#include "mtix/query.hpp"
#include "mtix/remainder.hpp"

namespace mtix::cli {

enum ExitCode : int { ok = 0, usage = 1, input_error = 2, invariant_violation = 3 };

/// Options gathered from the command line, shared by every subcommand.
struct RunConfig {
    std::string command;
    std::string input;
    std::string output;
    std::string query_file;
    std::string v_path;
    std::string w_path;
    std::string h_path;
    bool triples = false;
    bool keep_case = false;
    std::string charset = "alnum";
    std::string codec_doc = "delta";
    std::string codec_payload = "gamma";
    std::string codec_coeff = "gamma";
    FactorParams params;
    bool no_stage2 = false;
    Payload theta = 1;
    std::vector<Payload> thetas;
    std::size_t k = 10;
    bool tsv = false;
    bool verbose = false;

    [[nodiscard]] auto codecs() const -> CodecConfig {
        return {parse_codec(codec_doc), parse_codec(codec_payload), parse_codec(codec_coeff)};
    }

    [[nodiscard]] auto tokenizer() const -> TokenizerConfig {
        TokenizerConfig cfg;
        cfg.case_fold = !keep_case;
        if (charset == "alnum") {
            cfg.charset = TokenizerConfig::Charset::alnum;
        } else if (charset == "non-space") {
            cfg.charset = TokenizerConfig::Charset::non_space;
        } else {
            throw ValidationError("unknown charset '" + charset + "'");
        }
        return cfg;
    }

    [[nodiscard]] auto factor_params() const -> FactorParams {
        auto p = params;
        p.enable_stage2 = !no_stage2;
        return p;
    }
};

namespace detail {

inline auto load_matrix(RunConfig const& cfg) -> TermDocMatrix {
    auto v = cfg.triples ? ingest_triples(cfg.input) : ingest_tsv(cfg.input, cfg.tokenizer());
    ensure_names(v);
    return v;
}

inline auto open_output(std::string const& path) -> std::ofstream {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    return out;
}

inline auto format_ratio(std::optional<double> r) -> std::string {
    if (!r) {
        return "n/a";
    }
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *r;
    return s.str();
}

inline void print_stats(std::ostream& out, IndexStats const& s, bool tsv) {
    std::vector<std::pair<std::string, std::string>> fields{
        {"nnz_V", std::to_string(s.nnz_v)},
        {"nnz_W", std::to_string(s.nnz_w)},
        {"nnz_H", std::to_string(s.nnz_h)},
        {"bytes_direct", std::to_string(s.bytes_direct)},
        {"bytes_factored", std::to_string(s.bytes_factored)},
        {"ratio", format_ratio(s.ratio())},
    };
    for (auto const& [key, value] : fields) {
        if (tsv) {
            out << key << '\t' << value << '\n';
        } else {
            out << std::left << std::setw(16) << key << std::right << std::setw(14) << value << '\n';
        }
    }
}

inline auto read_queries(std::string const& path, std::size_t k, TokenizerConfig const& tok)
    -> std::vector<std::pair<std::string, Query>> {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open query file '" + path + "'");
    }
    std::vector<std::pair<std::string, Query>> queries;
    std::string line;
    while (std::getline(in, line)) {
        mtix::detail::strip_cr(line);
        if (line.empty()) {
            continue;
        }
        queries.push_back({line, Query{tokenize(line, tok), k}});
    }
    return queries;
}

inline auto factor_checked(TermDocMatrix const& v, FactorParams const& params) -> Factorization {
    auto f = factor(v, params);
    verify_exact(v, f);
    return f;
}

inline auto cmd_build(RunConfig const& cfg, std::ostream& out, std::ostream& err) -> int {
    auto v = load_matrix(cfg);
    if (cfg.theta > 1) {
        v = prune(v, cfg.theta);
    }
    auto codecs = cfg.codecs();
    auto f = factor_checked(v, cfg.factor_params());
    auto s = stats(v, f, codecs);
    auto bytes = save_index(make_index(v, std::move(f), codecs), cfg.output);
    if (cfg.verbose) {
        err << "wrote " << bytes << " bytes to " << cfg.output << '\n';
    }
    print_stats(out, s, cfg.tsv);
    return ok;
}

inline auto cmd_factor(RunConfig const& cfg, std::ostream& out, std::ostream&) -> int {
    auto v = load_matrix(cfg);
    if (cfg.theta > 1) {
        v = prune(v, cfg.theta);
    }
    auto f = factor_checked(v, cfg.factor_params());
    auto w = open_output(cfg.w_path);
    auto h = open_output(cfg.h_path);
    export_factors(f, w, h);
    if (!cfg.v_path.empty()) {
        auto vo = open_output(cfg.v_path);
        export_triples(v, vo);
    }
    print_stats(out, stats(v, f, cfg.codecs()), cfg.tsv);
    return ok;
}

inline auto cmd_stats(RunConfig const& cfg, std::ostream& out, std::ostream&) -> int {
    auto index = load_index(cfg.input);
    auto v = reconstruct(index.factors);
    print_stats(out, stats(v, index.factors, index.codecs), cfg.tsv);
    return ok;
}

inline auto cmd_query(RunConfig const& cfg, std::ostream& out, std::ostream& err) -> int {
    auto index = load_index(cfg.input);
    for (auto const& [text, q] : read_queries(cfg.query_file, cfg.k, cfg.tokenizer())) {
        std::vector<std::string> dropped;
        auto ids = resolve_terms(index.lexicon, q, &dropped);
        if (cfg.verbose) {
            for (auto const& term : dropped) {
                err << "unknown term '" << term << "' dropped\n";
            }
        }
        out << "# " << text << '\n';
        auto results = top_k(index.factors, ids, q.k);
        for (std::size_t rank = 0; rank < results.size(); ++rank) {
            out << rank + 1 << '\t' << index.doc_names[results[rank].doc] << '\t' << results[rank].score << '\n';
        }
        out << '\n';
    }
    return ok;
}

inline auto cmd_prune(RunConfig const& cfg, std::ostream& out, std::ostream&) -> int {
    auto v = load_matrix(cfg);
    auto pruned = prune(v, cfg.theta);
    auto o = open_output(cfg.output);
    export_triples(pruned, o);
    if (cfg.tsv) {
        out << "nnz_before\t" << nnz(v) << "\nnnz_after\t" << nnz(pruned) << '\n';
    } else {
        out << "pruned " << nnz(v) - nnz(pruned) << " of " << nnz(v) << " postings\n";
    }
    return ok;
}

inline auto cmd_bench(RunConfig const& cfg, std::ostream& out, std::ostream&) -> int {
    auto v = load_matrix(cfg);
    std::vector<Query> queries;
    if (!cfg.query_file.empty()) {
        for (auto& [text, q] : read_queries(cfg.query_file, cfg.k, cfg.tokenizer())) {
            queries.push_back(std::move(q));
        }
    }
    auto thetas = cfg.thetas.empty() ? std::vector<Payload>{1} : cfg.thetas;
    auto rows = run_bench(v, thetas, queries, cfg.codecs(), cfg.factor_params());
    auto overlap = [](BenchRow const& r) { return format_ratio(r.mean_overlap); };
    if (cfg.tsv) {
        out << "theta\tnnz\tbytes_direct\tbytes_factored\tratio\toverlap\n";
        for (auto const& r : rows) {
            out << r.theta << '\t' << r.nnz << '\t' << r.stats.bytes_direct << '\t' << r.stats.bytes_factored << '\t'
                << format_ratio(r.stats.ratio()) << '\t' << overlap(r) << '\n';
        }
        return ok;
    }
    out << std::setw(10) << "theta" << std::setw(12) << "nnz" << std::setw(14) << "bytes_direct" << std::setw(16)
        << "bytes_factored" << std::setw(10) << "ratio" << std::setw(12) << ("overlap@" + std::to_string(cfg.k))
        << '\n';
    for (auto const& r : rows) {
        out << std::setw(10) << r.theta << std::setw(12) << r.nnz << std::setw(14) << r.stats.bytes_direct
            << std::setw(16) << r.stats.bytes_factored << std::setw(10) << format_ratio(r.stats.ratio())
            << std::setw(12) << overlap(r) << '\n';
    }
    return ok;
}

inline auto cmd_diag_remainder(RunConfig const& cfg, std::ostream& out, std::ostream&) -> int {
    auto v = read_int_triples(cfg.v_path);
    auto w = read_int_triples(cfg.w_path);
    auto h = read_int_triples(cfg.h_path);
    auto report = remainder_report(v, w, h);
    auto verdict = report.r_larger_than_v() ? "yes" : "no";
    if (cfg.tsv) {
        out << "nnz_V\t" << report.nnz_v << "\nnnz_WH\t" << report.nnz_wh << "\nnnz_R\t" << report.nnz_r
            << "\nr_larger_than_v\t" << verdict << '\n';
    } else {
        out << std::left << std::setw(10) << "nnz_V" << report.nnz_v << '\n'
            << std::setw(10) << "nnz_WH" << report.nnz_wh << '\n'
            << std::setw(10) << "nnz_R" << report.nnz_r << '\n'
            << "R larger than V: " << verdict << '\n';
    }
    return ok;
}

inline void add_codec_flags(CLI::App* sub, RunConfig& cfg) {
    auto codecs = CLI::IsMember({"vbyte", "gamma", "delta"});
    sub->add_option("--codec-doc", cfg.codec_doc, "codec for doc and meta-term id gaps")->check(codecs);
    sub->add_option("--codec-payload", cfg.codec_payload, "codec for payloads and base values")->check(codecs);
    sub->add_option("--codec-coeff", cfg.codec_coeff, "codec for W coefficients")->check(codecs);
}

inline void add_factor_flags(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--min-cols", cfg.params.min_cols, "minimum shared columns for partial biclusters")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30));
    sub->add_option("--max-candidates", cfg.params.max_candidates_per_term, "candidate partners per term");
    sub->add_option("--threads", cfg.params.threads, "worker threads for candidate search (0 = all cores)");
    sub->add_flag("--no-stage2", cfg.no_stage2, "only group whole-row multiples");
}

inline void add_input_flags(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("input", cfg.input, "corpus (docname<TAB>text) or triples with --triples")->required();
    sub->add_flag("--triples", cfg.triples, "input is 'term doc payload' triples");
    sub->add_flag("--keep-case", cfg.keep_case, "do not case-fold tokens");
    sub->add_option("--charset", cfg.charset, "token charset")->check(CLI::IsMember({"alnum", "non-space"}));
}

}  // namespace detail

/// Runs the command line `args` (without the program name). Returns the process exit code.
inline auto run(std::vector<std::string> args, std::ostream& out, std::ostream& err) -> int {
    RunConfig cfg;
    CLI::App app{"mtix: exact factored inverted-index compression", "mtix"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    auto* build = app.add_subcommand("build", "ingest, factor and save an index");
    detail::add_input_flags(build, cfg);
    build->add_option("-o,--output", cfg.output, "index file")->required();
    build->add_option("--theta", cfg.theta, "prune postings below this payload before factoring");
    detail::add_codec_flags(build, cfg);
    detail::add_factor_flags(build, cfg);

    auto* fac = app.add_subcommand("factor", "factor a matrix and export W and H as triples");
    detail::add_input_flags(fac, cfg);
    fac->add_option("--w-out", cfg.w_path, "W triples (term metaterm coeff)")->required();
    fac->add_option("--h-out", cfg.h_path, "H triples (metaterm doc payload)")->required();
    fac->add_option("--v-out", cfg.v_path, "also export V as triples");
    fac->add_option("--theta", cfg.theta, "prune postings below this payload before factoring");
    detail::add_codec_flags(fac, cfg);
    detail::add_factor_flags(fac, cfg);

    auto* st = app.add_subcommand("stats", "print size statistics of a saved index");
    st->add_option("index", cfg.input, "index file")->required();

    auto* qry = app.add_subcommand("query", "run top-k queries against a saved index");
    qry->add_option("index", cfg.input, "index file")->required();
    qry->add_option("queries", cfg.query_file, "one query per line")->required();
    qry->add_option("--k", cfg.k, "results per query")->check(CLI::PositiveNumber);
    qry->add_flag("--keep-case", cfg.keep_case, "do not case-fold query terms");
    qry->add_option("--charset", cfg.charset, "token charset")->check(CLI::IsMember({"alnum", "non-space"}));

    auto* prn = app.add_subcommand("prune", "drop postings below a payload threshold");
    detail::add_input_flags(prn, cfg);
    prn->add_option("--theta", cfg.theta, "keep postings with payload >= theta")->required();
    prn->add_option("-o,--output", cfg.output, "pruned triples")->required();

    auto* bench = app.add_subcommand("bench", "size / quality table over a threshold sweep");
    detail::add_input_flags(bench, cfg);
    bench->add_option("--thetas", cfg.thetas, "ascending thresholds")->delimiter(',');
    bench->add_option("--queries", cfg.query_file, "query file for overlap@k");
    bench->add_option("--k", cfg.k, "results per query")->check(CLI::PositiveNumber);
    detail::add_codec_flags(bench, cfg);
    detail::add_factor_flags(bench, cfg);

    auto* diag = app.add_subcommand("diag-remainder", "nnz of R = V - W*H for externally supplied factors");
    diag->add_option("v_triples", cfg.v_path, "V triples (term doc value)")->required();
    diag->add_option("w_triples", cfg.w_path, "W triples (term metaterm coeff)")->required();
    diag->add_option("h_triples", cfg.h_path, "H triples (metaterm doc value)")->required();

    for (auto* sub : {build, fac, st, qry, prn, bench, diag}) {
        sub->add_flag("--tsv", cfg.tsv, "machine-readable output");
        sub->add_flag("-v,--verbose", cfg.verbose, "extra diagnostics on stderr");
    }

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (CLI::ParseError const& e) {
        auto code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    cfg.command = app.get_subcommands().front()->get_name();
    try {
        if (build->parsed()) return detail::cmd_build(cfg, out, err);
        if (fac->parsed()) return detail::cmd_factor(cfg, out, err);
        if (st->parsed()) return detail::cmd_stats(cfg, out, err);
        if (qry->parsed()) return detail::cmd_query(cfg, out, err);
        if (prn->parsed()) return detail::cmd_prune(cfg, out, err);
        if (bench->parsed()) return detail::cmd_bench(cfg, out, err);
        if (diag->parsed()) return detail::cmd_diag_remainder(cfg, out, err);
    } catch (InvariantViolation const& e) {
        err << "error: invariant violation: " << e.what() << '\n';
        return invariant_violation;
    } catch (Error const& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (std::exception const& e) {
        err << "error: internal: " << e.what() << '\n';
        return invariant_violation;
    }
    return usage;
}

}  // namespace mtix::cli
