#include <gtest/gtest.h>

#include <sstream>

#include "mtix/remainder.hpp"
#include "support/synthetic.hpp"

namespace mtix {
namespace {

auto triples(std::string const& text) -> IntMatrix {
    std::istringstream in(text);
    return read_int_triples(in);
}

TEST(Remainder, ExactFactorsLeaveNothing) {
    testing::Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        auto v = testing::random_matrix(rng, 30, 80, 0.1, 6);
        FactorParams p;
        p.min_cols = 2;
        auto f = factor(v, p);
        std::ostringstream w_text;
        std::ostringstream h_text;
        export_factors(f, w_text, h_text);
        auto report = remainder_report(to_int_matrix(v), triples(w_text.str()), triples(h_text.str()));
        EXPECT_EQ(report.nnz_r, 0U);
        EXPECT_EQ(report.nnz_wh, nnz(v));
        EXPECT_FALSE(report.r_larger_than_v());
    }
}

TEST(Remainder, IdentityAgainstAllOnesProduct) {
    auto v = triples("0 0 1\n1 1 1\n2 2 1\n");
    auto w = triples("0 0 1\n1 0 1\n2 0 1\n");
    auto h = triples("0 0 1\n0 1 1\n0 2 1\n");
    auto report = remainder_report(v, w, h);
    EXPECT_EQ(report.nnz_v, 3U);
    EXPECT_EQ(report.nnz_wh, 9U);
    EXPECT_EQ(report.nnz_r, 6U);
    EXPECT_TRUE(report.r_larger_than_v());
}

TEST(Remainder, EmptyFactorsLeaveV) {
    auto v = triples("0 0 4\n3 1 -2\n");
    auto report = remainder_report(v, IntMatrix{}, IntMatrix{});
    EXPECT_EQ(report.nnz_r, 2U);
    EXPECT_EQ(report.nnz_wh, 0U);
}

TEST(Remainder, SignedProductsCancel) {
    auto w = triples("0 0 1\n0 1 -1\n");
    auto h = triples("0 0 5\n1 0 5\n");
    EXPECT_EQ(multiply(w, h).nnz(), 0U);
}

TEST(Remainder, InputErrors) {
    EXPECT_THROW((void)triples("0 0\n"), ParseError);
    EXPECT_THROW((void)triples("0 0 1\n0 0 2\n"), ValidationError);
    EXPECT_EQ(triples("0 0 0\n").nnz(), 0U);
    EXPECT_THROW((void)multiply(triples("0 3 1\n"), triples("0 0 1\n")), ValidationError);
    EXPECT_THROW((void)multiply(triples("0 0 9223372036854775807\n"), triples("0 0 2\n")), ValidationError);
}

}  // namespace
}  // namespace mtix
