#pragma once

#include <array>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtix/codecs.hpp"
#include "mtix/error.hpp"
#include "mtix/factorizer.hpp"
#include "mtix/matrix.hpp"

// On-disk layout (all integers little-endian):
//
//   "MTIX" | u8 version | u8 doc_gap, payload, coeff codec ids
//   u64 num_terms | u64 num_docs | u64 num_metaterms
//   u64 offsets of doc-table, lexicon, H-section, W-section
//   doc-table  : u64 count, count x (u32 len, bytes)
//   lexicon    : u64 count, count x (u32 len, bytes, u64 W-row bit offset)
//   H-section  : u64 count, u64 byte length, bits
//   W-section  : u64 count, u64 byte length, bits
//
// The H bits start with the gamma-coded bit length of every meta-term list
// (list offsets are their prefix sums), followed by the lists. H lists are
// gapped lists of (doc, base payload); W rows are gapped lists of (meta-term id,
// coefficient). Both use the codec ids in the header.

namespace mtix {

inline constexpr std::array<char, 4> index_magic{'M', 'T', 'I', 'X'};
inline constexpr std::uint8_t index_version = 1;
inline constexpr std::size_t index_header_size = 64;

/// Everything a saved index holds.
struct IndexContents {
    Factorization factors;
    Lexicon lexicon;
    std::vector<std::string> doc_names;
    CodecConfig codecs;

    friend auto operator==(IndexContents const&, IndexContents const&) -> bool = default;
};

struct IndexStats {
    std::size_t nnz_v = 0;
    std::size_t nnz_w = 0;
    std::size_t nnz_h = 0;
    std::size_t bytes_direct = 0;
    std::size_t bytes_factored = 0;

    /// bytes_factored / bytes_direct, or nullopt when nothing was encoded directly.
    [[nodiscard]] auto ratio() const -> std::optional<double> {
        if (bytes_direct == 0) {
            return std::nullopt;
        }
        return static_cast<double>(bytes_factored) / static_cast<double>(bytes_direct);
    }
};

namespace detail {

class ByteSink {
  public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void str(std::string const& s) {
        if (s.size() > UINT32_MAX) {
            throw ValidationError("string too long for index");
        }
        u32(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }

    void raw(std::span<std::uint8_t const> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }

    void patch_u64(std::size_t at, std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
    }

    [[nodiscard]] auto size() const noexcept -> std::size_t { return bytes_.size(); }
    [[nodiscard]] auto take() && -> std::vector<std::uint8_t> { return std::move(bytes_); }

  private:
    std::vector<std::uint8_t> bytes_;
};

class ByteSource {
  public:
    ByteSource(std::span<std::uint8_t const> data, std::size_t pos, char const* section)
        : data_(data), pos_(pos), section_(section) {}

    auto u8() -> std::uint8_t { return static_cast<std::uint8_t>(take(1)); }
    auto u32() -> std::uint32_t { return static_cast<std::uint32_t>(take(4)); }
    auto u64() -> std::uint64_t { return take(8); }

    auto str() -> std::string {
        auto len = u32();
        need(len);
        std::string s(reinterpret_cast<char const*>(data_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    auto bytes(std::uint64_t len) -> std::span<std::uint8_t const> {
        need(len);
        auto out = data_.subspan(pos_, len);
        pos_ += len;
        return out;
    }

    [[nodiscard]] auto position() const noexcept -> std::size_t { return pos_; }

    void need(std::uint64_t len) const {
        if (pos_ > data_.size() || len > data_.size() - pos_) {
            throw CorruptionError(std::string("truncated ") + section_);
        }
    }

  private:
    auto take(int width) -> std::uint64_t {
        need(static_cast<std::uint64_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
        pos_ += width;
        return v;
    }

    std::span<std::uint8_t const> data_;
    std::size_t pos_;
    char const* section_;
};

struct EncodedSections {
    std::vector<std::uint8_t> h;
    std::vector<std::uint8_t> w;
    std::vector<std::uint64_t> w_offsets;  // bit offset of each W row
};

inline auto encode_w_row(BitWriter& out, std::vector<Membership> const& row, CodecConfig const& cfg) {
    encode_gapped(
        out, row, [](Membership const& m) { return std::uint64_t{m.meta}; },
        [](Membership const& m) { return m.coeff; }, cfg.doc_gap, cfg.coeff);
}

inline auto encode_sections(Factorization const& f, CodecConfig const& cfg) -> EncodedSections {
    EncodedSections out;

    BitWriter lists;
    BitWriter h_bits;
    for (auto const& m : f.metaterms) {
        auto start = lists.bit_size();
        encode_posting_list(lists, m.postings, cfg);
        gamma_encode(h_bits, lists.bit_size() - start);
    }
    BitReader copy(lists.bytes(), lists.bit_size());
    while (copy.remaining() > 0) {
        auto n = static_cast<unsigned>(std::min<std::size_t>(copy.remaining(), 32));
        h_bits.put_bits(copy.get_bits(n), n);
    }
    ByteSink h;
    h.u64(f.metaterms.size());
    h.u64(h_bits.byte_size());
    h.raw(h_bits.bytes());
    out.h = std::move(h).take();

    BitWriter w_bits;
    out.w_offsets.reserve(f.rows.size());
    for (auto const& row : f.rows) {
        out.w_offsets.push_back(w_bits.bit_size());
        encode_w_row(w_bits, row, cfg);
    }
    ByteSink w;
    w.u64(f.rows.size());
    w.u64(w_bits.byte_size());
    w.raw(w_bits.bytes());
    out.w = std::move(w).take();
    return out;
}

/// Size of V's rows encoded directly as one postings section (count, byte length, bits).
inline auto direct_section_bytes(TermDocMatrix const& v, CodecConfig const& cfg) -> std::size_t {
    BitWriter bits;
    for (auto const& row : v.rows) {
        encode_posting_list(bits, row.postings, cfg);
    }
    return 16 + bits.byte_size();
}

}  // namespace detail

/// Serializes an index into its on-disk byte image. Identical inputs give identical bytes.
[[nodiscard]] inline auto serialize_index(IndexContents const& index) -> std::vector<std::uint8_t> {
    auto const& f = index.factors;
    if (index.lexicon.size() != f.num_terms()) {
        throw ValidationError("lexicon has " + std::to_string(index.lexicon.size()) + " terms, W has " +
                              std::to_string(f.num_terms()) + " rows");
    }
    if (index.doc_names.size() != f.num_docs) {
        throw ValidationError("doc table has " + std::to_string(index.doc_names.size()) + " names for " +
                              std::to_string(f.num_docs) + " docs");
    }
    auto sections = detail::encode_sections(f, index.codecs);

    detail::ByteSink out;
    for (char c : index_magic) out.u8(static_cast<std::uint8_t>(c));
    out.u8(index_version);
    out.u8(static_cast<std::uint8_t>(index.codecs.doc_gap));
    out.u8(static_cast<std::uint8_t>(index.codecs.payload));
    out.u8(static_cast<std::uint8_t>(index.codecs.coeff));
    out.u64(f.num_terms());
    out.u64(f.num_docs);
    out.u64(f.metaterms.size());
    auto offsets_at = out.size();
    for (int i = 0; i < 4; ++i) out.u64(0);

    out.patch_u64(offsets_at, out.size());
    out.u64(index.doc_names.size());
    for (auto const& name : index.doc_names) out.str(name);

    out.patch_u64(offsets_at + 8, out.size());
    out.u64(index.lexicon.size());
    for (std::size_t t = 0; t < index.lexicon.size(); ++t) {
        out.str(index.lexicon.name(static_cast<TermId>(t)));
        out.u64(sections.w_offsets[t]);
    }

    out.patch_u64(offsets_at + 16, out.size());
    out.raw(sections.h);
    out.patch_u64(offsets_at + 24, out.size());
    out.raw(sections.w);
    return std::move(out).take();
}

[[nodiscard]] inline auto deserialize_index(std::span<std::uint8_t const> data) -> IndexContents {
    if (data.size() < index_header_size) {
        if (data.size() >= 4 && !std::equal(index_magic.begin(), index_magic.end(), data.begin())) {
            throw FormatError("bad magic; not an index file");
        }
        throw CorruptionError("truncated header");
    }
    if (!std::equal(index_magic.begin(), index_magic.end(), data.begin())) {
        throw FormatError("bad magic; not an index file");
    }
    detail::ByteSource header(data, 4, "header");
    auto version = header.u8();
    if (version != index_version) {
        throw FormatError("unsupported index version " + std::to_string(version));
    }
    IndexContents index;
    index.codecs.doc_gap = codec_from_id(header.u8());
    index.codecs.payload = codec_from_id(header.u8());
    index.codecs.coeff = codec_from_id(header.u8());
    auto num_terms = header.u64();
    auto num_docs = header.u64();
    auto num_metaterms = header.u64();
    std::array<std::uint64_t, 4> offsets{};
    for (auto& off : offsets) off = header.u64();
    std::uint64_t prev = index_header_size;
    for (auto off : offsets) {
        if (off < prev || off > data.size()) {
            throw CorruptionError("section offset " + std::to_string(off) + " out of bounds");
        }
        prev = off;
    }
    if (num_docs > (std::uint64_t{1} << 32) || num_metaterms > (std::uint64_t{1} << 32) ||
        num_terms > (std::uint64_t{1} << 32)) {
        throw CorruptionError("header counts exceed id range");
    }

    auto expect_count = [](std::uint64_t got, std::uint64_t want, char const* what) {
        if (got != want) {
            throw CorruptionError(std::string(what) + " count " + std::to_string(got) + " disagrees with header " +
                                  std::to_string(want));
        }
    };

    detail::ByteSource docs(data, offsets[0], "doc-table");
    expect_count(docs.u64(), num_docs, "doc-table");
    index.doc_names.reserve(num_docs);
    for (std::uint64_t d = 0; d < num_docs; ++d) index.doc_names.push_back(docs.str());
    if (docs.position() != offsets[1]) throw CorruptionError("doc-table overruns its section");

    detail::ByteSource lex(data, offsets[1], "lexicon");
    expect_count(lex.u64(), num_terms, "lexicon");
    std::vector<std::string> names;
    std::vector<std::uint64_t> w_offsets;
    for (std::uint64_t t = 0; t < num_terms; ++t) {
        names.push_back(lex.str());
        w_offsets.push_back(lex.u64());
    }
    if (lex.position() != offsets[2]) throw CorruptionError("lexicon overruns its section");
    try {
        index.lexicon = Lexicon::from_names(std::move(names));
    } catch (ValidationError const& e) {
        throw CorruptionError(std::string("lexicon: ") + e.what());
    }

    auto& f = index.factors;
    f.num_docs = num_docs;
    try {
        detail::ByteSource h(data, offsets[2], "H-section");
        expect_count(h.u64(), num_metaterms, "H-section");
        auto h_len = h.u64();
        auto h_bits = h.bytes(h_len);
        if (h.position() != offsets[3]) throw CorruptionError("H-section length disagrees with W-section offset");
        if (num_metaterms > h_len * 8) throw CorruptionError("H-section too short for its list table");
        BitReader table(h_bits);
        std::vector<std::uint64_t> h_lengths(num_metaterms);
        for (auto& len : h_lengths) len = gamma_decode(table);
        auto at = table.position();
        f.metaterms.resize(num_metaterms);
        for (std::uint64_t m = 0; m < num_metaterms; ++m) {
            if (h_lengths[m] > table.remaining()) throw CorruptionError("meta-term list runs past the H-section");
            BitReader in(h_bits);
            in.seek(at);
            f.metaterms[m].id = static_cast<MetaTermId>(m);
            f.metaterms[m].postings = decode_posting_list(in, index.codecs, num_docs);
            if (f.metaterms[m].postings.empty()) throw CorruptionError("empty meta-term");
            if (in.position() != at + h_lengths[m]) throw CorruptionError("meta-term list length mismatch");
            at += h_lengths[m];
            table.seek(at);
        }

        detail::ByteSource w(data, offsets[3], "W-section");
        expect_count(w.u64(), num_terms, "W-section");
        auto w_len = w.u64();
        auto w_bits = w.bytes(w_len);
        if (w.position() != data.size()) throw CorruptionError("trailing bytes after W-section");
        f.rows.resize(num_terms);
        for (std::uint64_t t = 0; t < num_terms; ++t) {
            BitReader in(w_bits);
            in.seek(w_offsets[t]);
            for (auto const& kv : decode_gapped(in, index.codecs.doc_gap, index.codecs.coeff, num_metaterms)) {
                f.rows[t].push_back({static_cast<MetaTermId>(kv.key), kv.value});
            }
        }
        for (std::size_t t = 0; t < f.rows.size(); ++t) {
            (void)expand_row(f, static_cast<TermId>(t));
        }
    } catch (TruncationError const& e) {
        throw CorruptionError(std::string("truncated bit stream: ") + e.what());
    } catch (OverflowError const& e) {
        throw CorruptionError(std::string("bit stream overflow: ") + e.what());
    } catch (InvariantViolation const& e) {
        throw CorruptionError(std::string("inconsistent factors: ") + e.what());
    }
    return index;
}

/// Writes the index to `path` and returns the file size in bytes.
inline auto save_index(IndexContents const& index, std::string const& path) -> std::size_t {
    auto bytes = serialize_index(index);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing: " + std::strerror(errno));
    }
    out.write(reinterpret_cast<char const*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write to '" + path + "' failed: " + std::strerror(errno));
    }
    return bytes.size();
}

[[nodiscard]] inline auto read_file_bytes(std::string const& path) -> std::vector<std::uint8_t> {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading: " + std::strerror(errno));
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[nodiscard]] inline auto load_index(std::string const& path) -> IndexContents {
    auto bytes = read_file_bytes(path);
    return deserialize_index(bytes);
}

/// Builds the contents to persist for a factorization of `v`.
[[nodiscard]] inline auto make_index(TermDocMatrix const& v, Factorization factors, CodecConfig const& cfg)
    -> IndexContents {
    TermDocMatrix names;
    names.rows.resize(v.num_terms());
    names.num_docs = v.num_docs;
    names.lexicon = v.lexicon;
    names.doc_names = v.doc_names;
    ensure_names(names);
    return {std::move(factors), std::move(names.lexicon), std::move(names.doc_names), cfg};
}

/// Size comparison between V encoded directly and W + H encoded under the same codecs.
[[nodiscard]] inline auto stats(TermDocMatrix const& v, Factorization const& f, CodecConfig const& cfg) -> IndexStats {
    IndexStats s;
    s.nnz_v = nnz(v);
    s.nnz_w = f.nnz_w();
    s.nnz_h = f.nnz_h();
    if (s.nnz_v == 0 && s.nnz_w == 0 && s.nnz_h == 0) {
        return s;
    }
    s.bytes_direct = detail::direct_section_bytes(v, cfg);
    auto sections = detail::encode_sections(f, cfg);
    s.bytes_factored = sections.h.size() + sections.w.size();
    return s;
}

}  // namespace mtix
