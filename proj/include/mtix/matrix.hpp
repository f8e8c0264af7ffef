#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mtix/error.hpp"

namespace mtix {

using TermId = std::uint32_t;
using DocId = std::uint32_t;
using Payload = std::uint64_t;

struct Posting {
    DocId doc = 0;
    Payload payload = 0;

    friend auto operator==(Posting const&, Posting const&) -> bool = default;
    friend auto operator<=>(Posting const&, Posting const&) = default;
};

struct PostingList {
    TermId term = 0;
    std::vector<Posting> postings;

    [[nodiscard]] auto size() const noexcept -> std::size_t { return postings.size(); }
    [[nodiscard]] auto empty() const noexcept -> bool { return postings.empty(); }

    friend auto operator==(PostingList const&, PostingList const&) -> bool = default;
};

/// Bidirectional term string <-> TermId map. Ids are handed out in first-seen order.
class Lexicon {
  public:
    Lexicon() = default;

    static auto from_names(std::vector<std::string> names) -> Lexicon {
        Lexicon lex;
        lex.names_.reserve(names.size());
        for (auto& name : names) {
            if (lex.find(name)) {
                throw ValidationError("duplicate lexicon entry '" + name + "'");
            }
            lex.intern(name);
        }
        return lex;
    }

    auto intern(std::string_view term) -> TermId {
        auto key = std::string(term);
        if (auto it = ids_.find(key); it != ids_.end()) {
            return it->second;
        }
        auto id = static_cast<TermId>(names_.size());
        names_.push_back(key);
        ids_.emplace(std::move(key), id);
        return id;
    }

    [[nodiscard]] auto find(std::string_view term) const -> std::optional<TermId> {
        if (auto it = ids_.find(std::string(term)); it != ids_.end()) {
            return it->second;
        }
        return std::nullopt;
    }

    [[nodiscard]] auto name(TermId id) const -> std::string const& {
        if (id >= names_.size()) {
            throw LookupError("term id " + std::to_string(id) + " not in lexicon");
        }
        return names_[id];
    }

    [[nodiscard]] auto size() const noexcept -> std::size_t { return names_.size(); }
    [[nodiscard]] auto names() const noexcept -> std::vector<std::string> const& { return names_; }

    friend auto operator==(Lexicon const& a, Lexicon const& b) -> bool { return a.names_ == b.names_; }

  private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, TermId> ids_;
};

/// The term-document payload matrix: one posting list per term, rows indexed by TermId.
struct TermDocMatrix {
    std::vector<PostingList> rows;
    std::size_t num_docs = 0;
    Lexicon lexicon;
    std::vector<std::string> doc_names;

    [[nodiscard]] auto num_terms() const noexcept -> std::size_t { return rows.size(); }

    /// Throws ValidationError unless every row is strictly ascending, in range and zero-free.
    void validate() const {
        for (std::size_t t = 0; t < rows.size(); ++t) {
            auto const& row = rows[t];
            if (row.term != t) {
                throw ValidationError("row " + std::to_string(t) + " carries term id " +
                                      std::to_string(row.term));
            }
            for (std::size_t i = 0; i < row.postings.size(); ++i) {
                auto const& p = row.postings[i];
                if (p.payload == 0) {
                    throw ValidationError("zero payload stored in row " + std::to_string(t));
                }
                if (p.doc >= num_docs) {
                    throw ValidationError("doc id " + std::to_string(p.doc) + " out of range in row " +
                                          std::to_string(t));
                }
                if (i > 0 && row.postings[i - 1].doc >= p.doc) {
                    throw ValidationError("row " + std::to_string(t) + " is not strictly ascending");
                }
            }
        }
    }
};

/// Cell-for-cell equality: same shape and same non-zeros. Names are ignored.
[[nodiscard]] inline auto cells_equal(TermDocMatrix const& a, TermDocMatrix const& b) -> bool {
    if (a.num_docs != b.num_docs || a.rows.size() != b.rows.size()) {
        return false;
    }
    for (std::size_t t = 0; t < a.rows.size(); ++t) {
        if (a.rows[t].postings != b.rows[t].postings) {
            return false;
        }
    }
    return true;
}

[[nodiscard]] inline auto nnz(TermDocMatrix const& matrix) noexcept -> std::size_t {
    std::size_t total = 0;
    for (auto const& row : matrix.rows) {
        total += row.size();
    }
    return total;
}

/// A row split into its gcd and the primitive base vector. scale * base == row.
struct PrimitiveRow {
    Payload scale = 0;
    std::vector<Posting> base;

    friend auto operator==(PrimitiveRow const&, PrimitiveRow const&) -> bool = default;
};

[[nodiscard]] inline auto payload_gcd(std::span<Posting const> postings) noexcept -> Payload {
    Payload g = 0;
    for (auto const& p : postings) {
        g = std::gcd(g, p.payload);
        if (g == 1) {
            break;
        }
    }
    return g;
}

[[nodiscard]] inline auto primitive_form(std::span<Posting const> row) -> PrimitiveRow {
    if (row.empty()) {
        throw DomainError("primitive form of an empty row is undefined");
    }
    PrimitiveRow out;
    out.scale = payload_gcd(row);
    if (out.scale == 0) {
        throw DomainError("row contains only zero payloads");
    }
    out.base.reserve(row.size());
    for (auto const& p : row) {
        out.base.push_back({p.doc, p.payload / out.scale});
    }
    return out;
}

[[nodiscard]] inline auto primitive_form(PostingList const& row) -> PrimitiveRow {
    return primitive_form(std::span<Posting const>(row.postings));
}

struct TokenizerConfig {
    enum class Charset {
        /// ASCII letters and digits; bytes >= 0x80 are kept so UTF-8 words stay whole.
        alnum,
        /// Anything that is not ASCII whitespace.
        non_space,
    };

    bool case_fold = true;
    Charset charset = Charset::alnum;
};

namespace detail {

inline auto is_token_byte(unsigned char c, TokenizerConfig::Charset charset) noexcept -> bool {
    if (charset == TokenizerConfig::Charset::non_space) {
        return std::isspace(c) == 0;
    }
    return c >= 0x80 || std::isalnum(c) != 0;
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

inline void grow_rows(std::vector<PostingList>& rows, TermId term) {
    for (auto t = rows.size(); t <= term; ++t) {
        rows.push_back({static_cast<TermId>(t), {}});
    }
}

inline auto open_input(std::string const& path) -> std::ifstream {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return in;
}

template <typename Int>
auto parse_int(std::string_view token, std::size_t line_no, char const* what) -> Int {
    Int value{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError(line_no, std::string("invalid ") + what + " '" + std::string(token) + "'");
    }
    return value;
}

inline auto split_fields(std::string_view line) -> std::vector<std::string_view> {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])) != 0) {
            ++i;
        }
        auto start = i;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])) == 0) {
            ++i;
        }
        if (i > start) {
            fields.push_back(line.substr(start, i - start));
        }
    }
    return fields;
}

}  // namespace detail

/// Splits a document body into tokens according to `config`.
[[nodiscard]] inline auto tokenize(std::string_view text, TokenizerConfig const& config)
    -> std::vector<std::string> {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (detail::is_token_byte(c, config.charset)) {
            if (config.case_fold && c < 0x80) {
                c = static_cast<unsigned char>(std::tolower(c));
            }
            current.push_back(static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

/// Reads a "docname<TAB>body" corpus. Payloads are term frequencies.
[[nodiscard]] inline auto ingest_tsv(std::istream& in, TokenizerConfig const& config = {}) -> TermDocMatrix {
    TermDocMatrix matrix;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::pair<TermId, Payload>> counts;
    std::unordered_map<TermId, std::size_t> slot;
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(line_no, "missing tab between document name and body");
        }
        auto doc = static_cast<DocId>(matrix.num_docs);
        matrix.doc_names.push_back(line.substr(0, tab));
        ++matrix.num_docs;

        counts.clear();
        slot.clear();
        for (auto const& token : tokenize(std::string_view(line).substr(tab + 1), config)) {
            auto term = matrix.lexicon.intern(token);
            if (auto it = slot.find(term); it != slot.end()) {
                ++counts[it->second].second;
            } else {
                slot.emplace(term, counts.size());
                counts.emplace_back(term, 1);
            }
        }
        for (auto [term, tf] : counts) {
            detail::grow_rows(matrix.rows, term);
            matrix.rows[term].postings.push_back({doc, tf});
        }
    }
    return matrix;
}

[[nodiscard]] inline auto ingest_tsv(std::string const& path, TokenizerConfig const& config = {})
    -> TermDocMatrix {
    auto in = detail::open_input(path);
    return ingest_tsv(in, config);
}

/// Reads "term doc payload" triples. Terms and docs are named by their decimal ids.
[[nodiscard]] inline auto ingest_triples(std::istream& in) -> TermDocMatrix {
    struct Cell {
        TermId term;
        DocId doc;
        Payload payload;
        std::size_t line;
    };
    std::vector<Cell> cells;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = detail::split_fields(line);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 3) {
            throw ParseError(line_no, "expected 'term doc payload'");
        }
        if (!fields[2].empty() && fields[2].front() == '-') {
            throw ValidationError("line " + std::to_string(line_no) + ": negative payload");
        }
        auto term = detail::parse_int<TermId>(fields[0], line_no, "term id");
        auto doc = detail::parse_int<DocId>(fields[1], line_no, "doc id");
        auto payload = detail::parse_int<Payload>(fields[2], line_no, "payload");
        if (payload == 0) {
            throw ValidationError("line " + std::to_string(line_no) + ": zero payload");
        }
        cells.push_back({term, doc, payload, line_no});
    }
    std::stable_sort(cells.begin(), cells.end(), [](Cell const& a, Cell const& b) {
        return std::pair(a.term, a.doc) < std::pair(b.term, b.doc);
    });

    TermDocMatrix matrix;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto const& c = cells[i];
        if (i > 0 && cells[i - 1].term == c.term && cells[i - 1].doc == c.doc) {
            throw ValidationError("line " + std::to_string(c.line) + ": duplicate cell (" +
                                  std::to_string(c.term) + ", " + std::to_string(c.doc) + ")");
        }
        detail::grow_rows(matrix.rows, c.term);
        matrix.rows[c.term].postings.push_back({c.doc, c.payload});
        matrix.num_docs = std::max<std::size_t>(matrix.num_docs, std::size_t{c.doc} + 1);
    }
    std::vector<std::string> names;
    names.reserve(matrix.rows.size());
    for (std::size_t t = 0; t < matrix.rows.size(); ++t) {
        names.push_back(std::to_string(t));
    }
    matrix.lexicon = Lexicon::from_names(std::move(names));
    matrix.doc_names.reserve(matrix.num_docs);
    for (std::size_t d = 0; d < matrix.num_docs; ++d) {
        matrix.doc_names.push_back(std::to_string(d));
    }
    return matrix;
}

[[nodiscard]] inline auto ingest_triples(std::string const& path) -> TermDocMatrix {
    auto in = detail::open_input(path);
    return ingest_triples(in);
}

/// Canonical triple dump: rows in TermId order, postings in DocId order.
inline void export_triples(TermDocMatrix const& matrix, std::ostream& out) {
    for (auto const& row : matrix.rows) {
        for (auto const& p : row.postings) {
            out << row.term << ' ' << p.doc << ' ' << p.payload << '\n';
        }
    }
}

/// Fills in decimal names for any missing lexicon or doc-table entries.
inline void ensure_names(TermDocMatrix& matrix) {
    if (matrix.lexicon.size() < matrix.rows.size()) {
        auto names = matrix.lexicon.names();
        for (auto t = names.size(); t < matrix.rows.size(); ++t) {
            names.push_back(std::to_string(t));
        }
        matrix.lexicon = Lexicon::from_names(std::move(names));
    }
    for (auto d = matrix.doc_names.size(); d < matrix.num_docs; ++d) {
        matrix.doc_names.push_back(std::to_string(d));
    }
}

}  // namespace mtix
