#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mtix/error.hpp"
#include "mtix/matrix.hpp"

namespace mtix {

/// A sparse integer matrix read from "row col value" triples. Values may be any
/// 64-bit integer; zeros are dropped on read.
struct IntMatrix {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::int64_t> cells;

    [[nodiscard]] auto nnz() const noexcept -> std::size_t { return cells.size(); }

    /// One past the largest row index, 0 when empty.
    [[nodiscard]] auto row_extent() const -> std::uint64_t {
        std::uint64_t n = 0;
        for (auto const& [at, v] : cells) n = std::max(n, at.first + 1);
        return n;
    }
};

[[nodiscard]] inline auto read_int_triples(std::istream& in) -> IntMatrix {
    IntMatrix m;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::pair<std::uint64_t, std::uint64_t>, bool> seen;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = detail::split_fields(line);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 3) {
            throw ParseError(line_no, "expected 'row col value'");
        }
        auto row = detail::parse_int<std::uint64_t>(fields[0], line_no, "row index");
        auto col = detail::parse_int<std::uint64_t>(fields[1], line_no, "column index");
        auto value = detail::parse_int<std::int64_t>(fields[2], line_no, "value");
        if (!seen.emplace(std::pair(row, col), true).second) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate cell (" + std::to_string(row) +
                                  ", " + std::to_string(col) + ")");
        }
        if (value != 0) {
            m.cells[{row, col}] = value;
        }
    }
    return m;
}

[[nodiscard]] inline auto read_int_triples(std::string const& path) -> IntMatrix {
    auto in = detail::open_input(path);
    return read_int_triples(in);
}

[[nodiscard]] inline auto to_int_matrix(TermDocMatrix const& v) -> IntMatrix {
    IntMatrix m;
    for (auto const& row : v.rows) {
        for (auto const& p : row.postings) {
            if (p.payload > static_cast<Payload>(INT64_MAX)) {
                throw ValidationError("payload exceeds signed 64-bit range");
            }
            m.cells[{row.term, p.doc}] = static_cast<std::int64_t>(p.payload);
        }
    }
    return m;
}

struct RemainderReport {
    std::size_t nnz_v = 0;
    std::size_t nnz_wh = 0;
    std::size_t nnz_r = 0;

    [[nodiscard]] auto r_larger_than_v() const noexcept -> bool { return nnz_r > nnz_v; }
};

namespace detail {

inline auto checked_add(std::int64_t a, std::int64_t b) -> std::int64_t {
    std::int64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw ValidationError("integer overflow computing W*H");
    return out;
}

inline auto checked_mul(std::int64_t a, std::int64_t b) -> std::int64_t {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw ValidationError("integer overflow computing W*H");
    return out;
}

}  // namespace detail

/// Product of sparse integer matrices. Every column of `w` must name a row of `h`.
[[nodiscard]] inline auto multiply(IntMatrix const& w, IntMatrix const& h) -> IntMatrix {
    auto inner = h.row_extent();
    std::map<std::uint64_t, std::vector<std::pair<std::uint64_t, std::int64_t>>> h_rows;
    for (auto const& [at, value] : h.cells) {
        h_rows[at.first].emplace_back(at.second, value);
    }
    IntMatrix out;
    for (auto const& [at, wv] : w.cells) {
        if (at.second >= inner) {
            throw ValidationError("dimension mismatch: W column " + std::to_string(at.second) + " but H has " +
                                  std::to_string(inner) + " rows");
        }
        auto it = h_rows.find(at.second);
        if (it == h_rows.end()) {
            continue;
        }
        for (auto const& [col, hv] : it->second) {
            auto& cell = out.cells[{at.first, col}];
            cell = detail::checked_add(cell, detail::checked_mul(wv, hv));
        }
    }
    std::erase_if(out.cells, [](auto const& kv) { return kv.second == 0; });
    return out;
}

/// Exact integer remainder R = V - W*H and its non-zero counts.
[[nodiscard]] inline auto remainder_report(IntMatrix const& v, IntMatrix const& w, IntMatrix const& h)
    -> RemainderReport {
    auto wh = multiply(w, h);
    RemainderReport report{v.nnz(), wh.nnz(), 0};
    auto r = v.cells;
    for (auto const& [at, value] : wh.cells) {
        std::int64_t diff = 0;
        if (__builtin_sub_overflow(r[at], value, &diff)) {
            throw ValidationError("integer overflow computing V - W*H");
        }
        r[at] = diff;
    }
    for (auto const& [at, value] : r) {
        report.nnz_r += value != 0 ? 1 : 0;
    }
    return report;
}

}  // namespace mtix
