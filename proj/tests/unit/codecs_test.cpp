#include <gtest/gtest.h>

#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "mtix/codecs.hpp"
#include "support/synthetic.hpp"

namespace mtix {
namespace {

auto bytes(std::initializer_list<std::uint8_t> b) { return std::vector<std::uint8_t>(b); }

TEST(VByte, Examples) {
    EXPECT_EQ(vbyte_encode(0), bytes({0x00}));
    EXPECT_EQ(vbyte_encode(127), bytes({0x7F}));
    EXPECT_EQ(vbyte_encode(128), bytes({0x80, 0x01}));
    EXPECT_EQ(vbyte_encode(300), bytes({0xAC, 0x02}));

    auto zero = vbyte_decode(bytes({0x00}));
    EXPECT_EQ(zero.value, 0U);
    EXPECT_EQ(zero.consumed, 1U);
    auto three_hundred = vbyte_decode(bytes({0xAC, 0x02, 0x55}));
    EXPECT_EQ(three_hundred.value, 300U);
    EXPECT_EQ(three_hundred.consumed, 2U);
}

TEST(VByte, Errors) {
    EXPECT_THROW((void)vbyte_decode(bytes({0x80})), TruncationError);
    EXPECT_THROW((void)vbyte_decode(bytes({})), TruncationError);
    std::vector<std::uint8_t> eleven(11, 0x80);
    eleven.back() = 0x00;
    EXPECT_THROW((void)vbyte_decode(eleven), OverflowError);
    std::vector<std::uint8_t> wide(10, 0xFF);
    wide.back() = 0x02;
    EXPECT_THROW((void)vbyte_decode(wide), OverflowError);
    auto max = vbyte_encode(UINT64_MAX);
    EXPECT_EQ(max.size(), 10U);
    EXPECT_EQ(vbyte_decode(max).value, UINT64_MAX);
}

TEST(Gamma, Examples) {
    EXPECT_EQ(gamma_bits(1), "1");
    EXPECT_EQ(gamma_bits(5), "00101");
    EXPECT_EQ(gamma_bits(9), "0001001");
    BitWriter w;
    EXPECT_THROW(gamma_encode(w, 0), DomainError);
}

TEST(Delta, Examples) {
    EXPECT_EQ(delta_bits(1), "1");
    EXPECT_EQ(delta_bits(5), "01101");
    EXPECT_EQ(delta_bits(9), "00100001");
    BitWriter w;
    EXPECT_THROW(delta_encode(w, 0), DomainError);
}

TEST(BitStream, MsbFirstPacking) {
    BitWriter w;
    w.put_bits(0b101, 3);
    w.put_bits(0b11111, 5);
    w.put_bit(true);
    EXPECT_EQ(w.bytes(), bytes({0b10111111, 0b10000000}));
    EXPECT_EQ(w.bit_size(), 9U);
    BitReader r(w.bytes(), w.bit_size());
    EXPECT_EQ(r.get_bits(3), 0b101U);
    EXPECT_EQ(r.get_bits(6), 0b111111U);
    EXPECT_THROW((void)r.get_bit(), TruncationError);
}

TEST(Codes, LengthLaws) {
    std::mt19937_64 rng(17);
    auto check = [](std::uint64_t x) {
        auto n = floor_log2(x);
        ASSERT_EQ(gamma_bits(x).size(), 2 * n + 1) << x;
        ASSERT_EQ(delta_bits(x).size(), n + 2 * floor_log2(std::uint64_t{n} + 1) + 1) << x;
        ASSERT_EQ(code_length(Codec::gamma, x), 2 * n + 1);
    };
    for (std::uint64_t x = 1; x <= 5000; ++x) check(x);
    for (int i = 0; i < 5000; ++i) check(rng() | 1U);
}

TEST(Codes, RoundTripEveryCodecInOneStream) {
    std::mt19937_64 rng(23);
    std::vector<std::pair<Codec, std::uint64_t>> values;
    for (int i = 0; i < 3000; ++i) {
        auto codec = static_cast<Codec>(i % 3);
        auto x = rng() >> (rng() % 64);
        if (codec != Codec::vbyte && x == 0) x = 1;
        values.emplace_back(codec, x);
    }
    BitWriter w;
    for (auto [c, x] : values) write_value(w, c, x);
    BitReader r(w.bytes(), w.bit_size());
    for (auto [c, x] : values) ASSERT_EQ(read_value(r, c), x);
    EXPECT_EQ(r.remaining(), 0U);
}

TEST(Codes, CorruptPrefixes) {
    BitWriter zeros;
    zeros.put_zeros(80);
    zeros.put_bit(true);
    BitReader g(zeros.bytes(), zeros.bit_size());
    EXPECT_THROW((void)gamma_decode(g), OverflowError);

    BitWriter huge_len;
    gamma_encode(huge_len, 70);  // delta length field above 64
    huge_len.put_zeros(80);
    BitReader d(huge_len.bytes(), huge_len.bit_size());
    EXPECT_THROW((void)delta_decode(d), OverflowError);
}

TEST(Conformance, ShippedVectors) {
    std::ifstream in(MTIX_DATA_DIR "/codec_vectors.tsv");
    ASSERT_TRUE(in) << "missing codec_vectors.tsv";
    std::string line;
    std::size_t checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::uint64_t value = 0;
        std::string codec;
        std::string expected;
        fields >> value >> codec >> expected;
        auto c = parse_codec(codec);
        BitWriter w;
        write_value(w, c, value);
        std::string got;
        if (c == Codec::vbyte) {
            std::ostringstream hex;
            for (auto b : w.bytes()) hex << std::hex << std::setw(2) << std::setfill('0') << int{b};
            got = hex.str();
        } else {
            got = w.to_bitstring();
        }
        ASSERT_EQ(got, expected) << codec << ' ' << value;
        BitReader r(w.bytes(), w.bit_size());
        ASSERT_EQ(read_value(r, c), value);
        ++checked;
    }
    EXPECT_GT(checked, 100U);
}

TEST(PostingListCodec, EmptyListIsSingleBit) {
    auto bits = encode_posting_list(PostingList{}, CodecConfig{Codec::gamma, Codec::gamma, Codec::gamma});
    EXPECT_EQ(bits.to_bitstring(), "1");
    BitReader r(bits.bytes(), bits.bit_size());
    EXPECT_TRUE(decode_posting_list(r, CodecConfig{}).empty());
}

TEST(PostingListCodec, GapExample) {
    CodecConfig cfg{Codec::gamma, Codec::gamma, Codec::gamma};
    PostingList pl{0, {{0, 2}, {3, 1}, {4, 5}}};
    auto bits = encode_posting_list(pl, cfg);
    // gamma(4) | gaps 1,3,1 | payloads 2,1,5
    EXPECT_EQ(bits.to_bitstring(), "00100" "1" "011" "1" "010" "1" "00101");
    BitReader r(bits.bytes(), bits.bit_size());
    EXPECT_EQ(decode_posting_list(r, cfg), pl.postings);
}

TEST(PostingListCodec, RoundTripAndConcatenation) {
    std::mt19937_64 rng(31);
    for (int c = 0; c < 27; ++c) {
        CodecConfig cfg{static_cast<Codec>(c % 3), static_cast<Codec>(c / 3 % 3), static_cast<Codec>(c / 9)};
        std::vector<std::vector<Posting>> lists;
        BitWriter w;
        for (int i = 0; i < 40; ++i) {
            std::vector<Posting> list;
            DocId doc = static_cast<DocId>(rng() % 5);
            for (auto n = rng() % 30; n > 0; --n) {
                list.push_back({doc, 1 + rng() % 1000});
                doc += static_cast<DocId>(1 + rng() % 100);
            }
            encode_posting_list(w, list, cfg);
            lists.push_back(std::move(list));
        }
        BitReader r(w.bytes(), w.bit_size());
        for (auto const& list : lists) ASSERT_EQ(decode_posting_list(r, cfg), list);
        EXPECT_EQ(r.remaining(), 0U);
    }
}

TEST(PostingListCodec, TruncationAndZeroGap) {
    CodecConfig cfg{Codec::gamma, Codec::gamma, Codec::gamma};
    auto bits = encode_posting_list(PostingList{0, {{0, 2}, {3, 1}, {4, 5}}}, cfg);
    BitReader cut(bits.bytes(), bits.bit_size() - 3);
    EXPECT_THROW((void)decode_posting_list(cut, cfg), TruncationError);

    CodecConfig vb{Codec::vbyte, Codec::vbyte, Codec::vbyte};
    BitWriter w;
    gamma_encode(w, 2);
    vbyte_write(w, 0);  // a zero gap is representable only in vbyte
    vbyte_write(w, 1);
    BitReader r(w.bytes(), w.bit_size());
    EXPECT_THROW((void)decode_posting_list(r, vb), CorruptionError);
}

TEST(PostingListCodec, FuzzedStreamsNeverYieldInvalidLists) {
    std::mt19937_64 rng(41);
    for (int c = 0; c < 3; ++c) {
        CodecConfig cfg{static_cast<Codec>(c), static_cast<Codec>((c + 1) % 3), Codec::gamma};
        for (int trial = 0; trial < 3000; ++trial) {
            std::vector<Posting> list;
            DocId doc = 0;
            for (auto n = 1 + rng() % 12; n > 0; --n) {
                doc += static_cast<DocId>(1 + rng() % 50);
                list.push_back({doc, 1 + rng() % 40});
            }
            auto w = encode_posting_list(PostingList{0, list}, cfg);
            auto data = w.bytes();
            for (auto flips = 1 + rng() % 3; flips > 0; --flips) {
                auto bit = rng() % w.bit_size();
                data[bit / 8] ^= static_cast<std::uint8_t>(0x80U >> (bit % 8));
            }
            BitReader r(data, w.bit_size());
            try {
                BitReader count_reader(data, w.bit_size());
                auto declared = gamma_decode(count_reader) - 1;
                auto got = decode_posting_list(r, cfg);
                ASSERT_EQ(got.size(), declared);
                for (std::size_t i = 0; i < got.size(); ++i) {
                    ASSERT_GE(got[i].payload, 1U);
                    if (i > 0) {
                        ASSERT_LT(got[i - 1].doc, got[i].doc);
                    }
                }
            } catch (Error const&) {
                // rejecting a corrupted stream is fine
            }
        }
    }
}

}  // namespace
}  // namespace mtix
