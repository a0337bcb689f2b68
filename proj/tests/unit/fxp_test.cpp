// SPDX-License-Identifier: Apache-2.0
#include "exai/fxp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "exai/error.hpp"
#include "test_support.hpp"

namespace exai {
namespace {

using testing::raw;

TEST(FxpFormat, ParseAndPrint) {
    EXPECT_EQ(FxpFormat::parse("q8.8"), kQ8_8);
    EXPECT_EQ(FxpFormat::parse("Q4.12").frac_bits, 12);
    EXPECT_EQ(FxpFormat::parse("q16.0").frac_bits, 0);
    EXPECT_EQ(FxpFormat{10}.to_string(), "q6.10");
    for (const char* bad : {"q8.7", "8.8", "q8", "q8.8x", "q0.16", "q-1.17", ""})
        EXPECT_THROW(FxpFormat::parse(bad), ParseError) << bad;
}

TEST(FxpFormat, RangeFormula) {
    EXPECT_DOUBLE_EQ(kQ8_8.max_value(), 128.0 - 1.0 / 256.0);
    EXPECT_DOUBLE_EQ(kQ8_8.min_value(), -128.0);
    EXPECT_DOUBLE_EQ(kQ8_8.epsilon(), 1.0 / 256.0);
}

TEST(Quantize, Examples) {
    EXPECT_EQ(quantize(0.0, kQ8_8).raw, 0);
    EXPECT_EQ(quantize(1.0, kQ8_8).raw, 256);
    QuantStats st;
    EXPECT_EQ(quantize(200.0, kQ8_8, &st).raw, 32767);
    EXPECT_EQ(quantize(-200.0, kQ8_8, &st).raw, -32768);
    EXPECT_EQ(st.saturated, 2u);
    EXPECT_EQ(st.total, 2u);
}

TEST(Quantize, TiesToEven) {
    const double half_lsb = 1.0 / 512.0;
    EXPECT_EQ(quantize(half_lsb, kQ8_8).raw, 0);
    EXPECT_EQ(quantize(3 * half_lsb, kQ8_8).raw, 2);
    EXPECT_EQ(quantize(-3 * half_lsb, kQ8_8).raw, -2);
}

TEST(Quantize, NanCountsAsSaturated) {
    QuantStats st;
    EXPECT_EQ(quantize(std::nan(""), kQ8_8, &st).raw, 0);
    EXPECT_EQ(st.saturated, 1u);
}

TEST(Quantize, RoundTripWithinHalfLsb) {
    testing::Rng rng(7);
    for (int f : {0, 4, 8, 12, 15}) {
        const FxpFormat fmt{f};
        std::uniform_real_distribution<double> d(fmt.min_value(), fmt.max_value());
        for (int k = 0; k < 20000; ++k) {
            const double x = d(rng);
            EXPECT_LE(std::abs(dequantize(quantize(x, fmt), fmt) - x), std::ldexp(1.0, -f - 1) + 1e-15);
        }
    }
}

TEST(Quantize, Monotone) {
    testing::Rng rng(11);
    std::uniform_real_distribution<double> d(-300.0, 300.0);
    for (int k = 0; k < 20000; ++k) {
        double a = d(rng), b = d(rng);
        if (a > b) std::swap(a, b);
        EXPECT_LE(quantize(a, kQ8_8), quantize(b, kQ8_8));
    }
}

TEST(Mac, Examples) {
    EXPECT_EQ(mac(Acc32{}, raw(256), raw(256)).raw, 65536);
    // 2.0 * 0.5 in Q8.8 is 512 * 128 = 65536 at 16 fractional bits
    EXPECT_EQ(mac(Acc32{65536}, raw(512), raw(128)).raw, 131072);
    EXPECT_EQ(mac(Acc32{12345}, raw(-777), raw(0)).raw, 12345);
}

TEST(Mac, ExactUntilSaturation) {
    testing::Rng rng(3);
    std::uniform_int_distribution<int> d(INT16_MIN, INT16_MAX);
    for (int trial = 0; trial < 200; ++trial) {
        Acc32 acc;
        std::int64_t wide = 0;
        for (int k = 0; k < 64; ++k) {
            const int a = d(rng) / 64, b = d(rng) / 64;  // keeps the sum inside int32
            acc = mac(acc, raw(a), raw(b));
            wide += std::int64_t{a} * b;
        }
        EXPECT_EQ(acc.raw, wide);
        EXPECT_FALSE(acc.overflow);
    }
}

TEST(Mac, SaturatesAndLatchesOverflow) {
    Acc32 acc{INT32_MAX - 10};
    acc = mac(acc, raw(100), raw(100));
    EXPECT_EQ(acc.raw, INT32_MAX);
    EXPECT_TRUE(acc.overflow);
    acc = mac(acc, raw(-32768), raw(32767));
    EXPECT_TRUE(acc.overflow);  // sticky even after coming back into range
    Acc32 neg{INT32_MIN + 5};
    EXPECT_EQ(mac(neg, raw(-100), raw(100)).raw, INT32_MIN);
}

TEST(Requantize, Examples) {
    EXPECT_EQ(requantize(Acc32{65536}, kQ8_8).raw, 256);
    EXPECT_EQ(requantize(Acc32{384}, kQ8_8).raw, 2);  // 1.5 LSB ties to even
    EXPECT_EQ(requantize(Acc32{640}, kQ8_8).raw, 2);  // 2.5 ties to even
    EXPECT_EQ(requantize(Acc32{-384}, kQ8_8).raw, -2);
    EXPECT_EQ(requantize(Acc32{-640}, kQ8_8).raw, -2);
    EXPECT_EQ(requantize(Acc32{385}, kQ8_8).raw, 2);
    EXPECT_EQ(requantize(Acc32{383}, kQ8_8).raw, 1);
    bool sat = false;
    EXPECT_EQ(requantize(Acc32{INT32_MAX}, kQ8_8, &sat).raw, 32767);
    EXPECT_TRUE(sat);
    EXPECT_EQ(requantize(Acc32{INT32_MIN}, kQ8_8, &sat).raw, -32768);
    EXPECT_TRUE(sat);
}

TEST(Requantize, RoundingMatchesRealArithmetic) {
    testing::Rng rng(5);
    std::uniform_int_distribution<std::int32_t> d(-(1 << 22), 1 << 22);
    for (int f : {1, 5, 8, 11}) {
        const FxpFormat fmt{f};
        for (int k = 0; k < 20000; ++k) {
            const std::int32_t a = d(rng);
            const double expect = std::nearbyint(std::ldexp(double(a), -f));
            EXPECT_EQ(requantize(Acc32{a}, fmt).raw, static_cast<std::int16_t>(std::clamp(expect, -32768.0, 32767.0)));
        }
    }
}

TEST(Requantize, InvertsMultiplyByOne) {
    for (int f : {0, 4, 8, 14}) {
        const FxpFormat fmt{f};
        const Fxp16 one = quantize(1.0, fmt);
        for (int r = INT16_MIN; r <= INT16_MAX; ++r)
            ASSERT_EQ(requantize(mac(Acc32{}, raw(r), one), fmt).raw, r) << "f=" << f;
    }
}

TEST(AddAligned, BiasJoinsAtDoublePrecision) {
    const Acc32 a = add_aligned(Acc32{}, raw(256), kQ8_8);
    EXPECT_EQ(a.raw, 65536);
    EXPECT_EQ(requantize(a, kQ8_8).raw, 256);
}

}  // namespace
}  // namespace exai
