#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtix/error.hpp"
#include "mtix/matrix.hpp"

namespace mtix {

enum class Codec : std::uint8_t { vbyte = 0, gamma = 1, delta = 2 };

[[nodiscard]] inline auto to_string(Codec codec) -> std::string_view {
    switch (codec) {
        case Codec::vbyte: return "vbyte";
        case Codec::gamma: return "gamma";
        case Codec::delta: return "delta";
    }
    return "?";
}

[[nodiscard]] inline auto parse_codec(std::string_view name) -> Codec {
    if (name == "vbyte") return Codec::vbyte;
    if (name == "gamma") return Codec::gamma;
    if (name == "delta") return Codec::delta;
    throw ValidationError("unknown codec '" + std::string(name) + "'");
}

[[nodiscard]] inline auto codec_from_id(std::uint8_t id) -> Codec {
    if (id > static_cast<std::uint8_t>(Codec::delta)) {
        throw FormatError("unknown codec id " + std::to_string(id));
    }
    return static_cast<Codec>(id);
}

struct CodecConfig {
    Codec doc_gap = Codec::delta;
    Codec payload = Codec::gamma;
    Codec coeff = Codec::gamma;

    friend auto operator==(CodecConfig const&, CodecConfig const&) -> bool = default;
};

/// Append-only bit sequence. Bits are written MSB-first into big-endian-ordered bytes.
class BitWriter {
  public:
    void put_bit(bool bit) {
        if ((bits_ & 7U) == 0) {
            bytes_.push_back(0);
        }
        if (bit) {
            bytes_.back() = static_cast<std::uint8_t>(bytes_.back() | (0x80U >> (bits_ & 7U)));
        }
        ++bits_;
    }

    /// Writes the low `count` bits of `value`, most significant first.
    void put_bits(std::uint64_t value, unsigned count) {
        for (unsigned i = count; i > 0; --i) {
            put_bit(((value >> (i - 1)) & 1U) != 0);
        }
    }

    void put_zeros(std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            put_bit(false);
        }
    }

    [[nodiscard]] auto bit_size() const noexcept -> std::size_t { return bits_; }
    [[nodiscard]] auto byte_size() const noexcept -> std::size_t { return bytes_.size(); }
    [[nodiscard]] auto bytes() const noexcept -> std::vector<std::uint8_t> const& { return bytes_; }

    [[nodiscard]] auto to_bitstring() const -> std::string {
        std::string out;
        out.reserve(bits_);
        for (std::size_t i = 0; i < bits_; ++i) {
            out.push_back(((bytes_[i / 8] >> (7 - i % 8)) & 1U) != 0 ? '1' : '0');
        }
        return out;
    }

  private:
    std::vector<std::uint8_t> bytes_;
    std::size_t bits_ = 0;
};

/// Cursor over a bit sequence. Never reads past `bit_limit`.
class BitReader {
  public:
    explicit BitReader(std::span<std::uint8_t const> bytes)
        : BitReader(bytes, bytes.size() * 8) {}

    BitReader(std::span<std::uint8_t const> bytes, std::size_t bit_limit)
        : bytes_(bytes), limit_(std::min(bit_limit, bytes.size() * 8)) {}

    [[nodiscard]] auto get_bit() -> bool {
        if (pos_ >= limit_) {
            throw TruncationError("bit stream ended at bit " + std::to_string(pos_));
        }
        bool bit = ((bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1U) != 0;
        ++pos_;
        return bit;
    }

    [[nodiscard]] auto get_bits(unsigned count) -> std::uint64_t {
        std::uint64_t value = 0;
        for (unsigned i = 0; i < count; ++i) {
            value = (value << 1U) | (get_bit() ? 1U : 0U);
        }
        return value;
    }

    void seek(std::size_t bit) {
        if (bit > limit_) {
            throw TruncationError("seek to bit " + std::to_string(bit) + " past end of stream");
        }
        pos_ = bit;
    }

    [[nodiscard]] auto position() const noexcept -> std::size_t { return pos_; }
    [[nodiscard]] auto remaining() const noexcept -> std::size_t { return limit_ - pos_; }

  private:
    std::span<std::uint8_t const> bytes_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

/// floor(log2 x) for x >= 1.
[[nodiscard]] constexpr auto floor_log2(std::uint64_t x) noexcept -> unsigned {
    return static_cast<unsigned>(std::bit_width(x)) - 1;
}

// ---------------------------------------------------------------------------
// Variable-byte: 7-bit groups, least significant first, high bit set on all
// but the last byte.

[[nodiscard]] inline auto vbyte_encode(std::uint64_t x) -> std::vector<std::uint8_t> {
    std::vector<std::uint8_t> out;
    while (x >= 0x80) {
        out.push_back(static_cast<std::uint8_t>((x & 0x7FU) | 0x80U));
        x >>= 7U;
    }
    out.push_back(static_cast<std::uint8_t>(x));
    return out;
}

struct VByteDecoded {
    std::uint64_t value = 0;
    std::size_t consumed = 0;
};

namespace detail {

inline constexpr std::size_t max_vbyte_bytes = 10;

template <typename NextByte>
auto vbyte_decode_with(NextByte&& next_byte) -> VByteDecoded {
    VByteDecoded out;
    unsigned shift = 0;
    while (true) {
        if (out.consumed == max_vbyte_bytes) {
            throw OverflowError("variable-byte value runs past 10 bytes");
        }
        auto byte = static_cast<std::uint8_t>(next_byte());
        ++out.consumed;
        std::uint64_t group = byte & 0x7FU;
        if (shift == 63 && group > 1) {
            throw OverflowError("variable-byte value exceeds 64 bits");
        }
        out.value |= group << shift;
        if ((byte & 0x80U) == 0) {
            return out;
        }
        shift += 7;
    }
}

}  // namespace detail

[[nodiscard]] inline auto vbyte_decode(std::span<std::uint8_t const> bytes) -> VByteDecoded {
    std::size_t i = 0;
    return detail::vbyte_decode_with([&] {
        if (i >= bytes.size()) {
            throw TruncationError("variable-byte value truncated");
        }
        return bytes[i++];
    });
}

inline void vbyte_write(BitWriter& out, std::uint64_t x) {
    for (auto byte : vbyte_encode(x)) {
        out.put_bits(byte, 8);
    }
}

[[nodiscard]] inline auto vbyte_read(BitReader& in) -> std::uint64_t {
    return detail::vbyte_decode_with([&] { return in.get_bits(8); }).value;
}

// ---------------------------------------------------------------------------
// Elias gamma and delta.

inline void gamma_encode(BitWriter& out, std::uint64_t x) {
    if (x == 0) {
        throw DomainError("gamma code is undefined for 0");
    }
    auto n = floor_log2(x);
    out.put_zeros(n);
    out.put_bits(x, n + 1);
}

[[nodiscard]] inline auto gamma_decode(BitReader& in) -> std::uint64_t {
    unsigned zeros = 0;
    while (!in.get_bit()) {
        if (++zeros > 63) {
            throw OverflowError("gamma prefix longer than 63 bits");
        }
    }
    return (std::uint64_t{1} << zeros) | in.get_bits(zeros);
}

inline void delta_encode(BitWriter& out, std::uint64_t x) {
    if (x == 0) {
        throw DomainError("delta code is undefined for 0");
    }
    auto n = floor_log2(x);
    gamma_encode(out, std::uint64_t{n} + 1);
    out.put_bits(x, n);
}

[[nodiscard]] inline auto delta_decode(BitReader& in) -> std::uint64_t {
    auto len = gamma_decode(in);
    if (len > 64) {
        throw OverflowError("delta length field " + std::to_string(len) + " exceeds 64");
    }
    auto n = static_cast<unsigned>(len - 1);
    return (std::uint64_t{1} << n) | in.get_bits(n);
}

/// Bitstring form of a single code word, e.g. gamma_bits(5) == "00101".
[[nodiscard]] inline auto gamma_bits(std::uint64_t x) -> std::string {
    BitWriter w;
    gamma_encode(w, x);
    return w.to_bitstring();
}

[[nodiscard]] inline auto delta_bits(std::uint64_t x) -> std::string {
    BitWriter w;
    delta_encode(w, x);
    return w.to_bitstring();
}

inline void write_value(BitWriter& out, Codec codec, std::uint64_t x) {
    switch (codec) {
        case Codec::vbyte: vbyte_write(out, x); return;
        case Codec::gamma: gamma_encode(out, x); return;
        case Codec::delta: delta_encode(out, x); return;
    }
}

[[nodiscard]] inline auto read_value(BitReader& in, Codec codec) -> std::uint64_t {
    switch (codec) {
        case Codec::vbyte: return vbyte_read(in);
        case Codec::gamma: return gamma_decode(in);
        case Codec::delta: return delta_decode(in);
    }
    throw FormatError("unknown codec");
}

/// Length in bits of the code word for `x`.
[[nodiscard]] inline auto code_length(Codec codec, std::uint64_t x) -> std::size_t {
    switch (codec) {
        case Codec::vbyte: return 8 * vbyte_encode(x).size();
        case Codec::gamma: {
            if (x == 0) throw DomainError("gamma code is undefined for 0");
            return 2 * std::size_t{floor_log2(x)} + 1;
        }
        case Codec::delta: {
            if (x == 0) throw DomainError("delta code is undefined for 0");
            auto n = floor_log2(x);
            return n + 2 * std::size_t{floor_log2(std::uint64_t{n} + 1)} + 1;
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Gapped lists: gamma(count + 1), then `count` key gaps (first gap = key + 1),
// then `count` values. Used for posting lists, meta-term lists and W rows.

struct KeyValue {
    std::uint64_t key = 0;
    std::uint64_t value = 0;

    friend auto operator==(KeyValue const&, KeyValue const&) -> bool = default;
};

template <typename Range, typename Key, typename Value>
void encode_gapped(BitWriter& out, Range const& items, Key key_of, Value value_of, Codec key_codec,
                   Codec value_codec) {
    gamma_encode(out, std::uint64_t{items.size()} + 1);
    std::uint64_t next = 0;
    for (auto const& item : items) {
        std::uint64_t key = key_of(item);
        if (key < next) {
            throw DomainError("keys must be strictly ascending");
        }
        write_value(out, key_codec, key - next + 1);
        next = key + 1;
    }
    for (auto const& item : items) {
        std::uint64_t value = value_of(item);
        if (value == 0) {
            throw DomainError("zero values are not representable in a gapped list");
        }
        write_value(out, value_codec, value);
    }
}

/// Decodes one gapped list. Keys must stay below `key_bound`.
[[nodiscard]] inline auto decode_gapped(BitReader& in, Codec key_codec, Codec value_codec,
                                        std::uint64_t key_bound = std::numeric_limits<std::uint64_t>::max())
    -> std::vector<KeyValue> {
    auto count = gamma_decode(in) - 1;
    // Every entry costs at least one bit for its gap and one for its value.
    if (count > in.remaining() / 2) {
        throw CorruptionError("list declares " + std::to_string(count) + " entries but only " +
                              std::to_string(in.remaining()) + " bits remain");
    }
    std::vector<KeyValue> items(count);
    std::uint64_t next = 0;
    for (auto& item : items) {
        auto gap = read_value(in, key_codec);
        if (gap == 0) {
            throw CorruptionError("zero gap in list");
        }
        if (gap - 1 >= key_bound - next) {
            throw CorruptionError("list key out of range");
        }
        item.key = next + gap - 1;
        next = item.key + 1;
    }
    for (auto& item : items) {
        item.value = read_value(in, value_codec);
        if (item.value == 0) {
            throw CorruptionError("zero value in list");
        }
    }
    return items;
}

inline void encode_posting_list(BitWriter& out, std::span<Posting const> postings, CodecConfig const& cfg) {
    encode_gapped(
        out, postings, [](Posting const& p) { return std::uint64_t{p.doc}; },
        [](Posting const& p) { return p.payload; }, cfg.doc_gap, cfg.payload);
}

[[nodiscard]] inline auto encode_posting_list(PostingList const& list, CodecConfig const& cfg) -> BitWriter {
    BitWriter out;
    encode_posting_list(out, list.postings, cfg);
    return out;
}

[[nodiscard]] inline auto decode_posting_list(BitReader& in, CodecConfig const& cfg,
                                              std::uint64_t num_docs = std::uint64_t{1} << 32)
    -> std::vector<Posting> {
    auto items = decode_gapped(in, cfg.doc_gap, cfg.payload, num_docs);
    std::vector<Posting> postings;
    postings.reserve(items.size());
    for (auto const& item : items) {
        postings.push_back({static_cast<DocId>(item.key), item.value});
    }
    return postings;
}

[[nodiscard]] inline auto decode_posting_list(std::span<std::uint8_t const> bytes, std::size_t bit_limit,
                                              CodecConfig const& cfg) -> std::vector<Posting> {
    BitReader in(bytes, bit_limit);
    return decode_posting_list(in, cfg);
}

}  // namespace mtix
