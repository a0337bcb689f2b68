// SPDX-License-Identifier: Apache-2.0
#include "exai/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "exai/error.hpp"
#include "test_support.hpp"

namespace exai {
namespace {

std::vector<std::byte> bytes_of(const std::string& s) {
    std::vector<std::byte> b;
    for (char c : s) b.push_back(std::byte(static_cast<unsigned char>(c)));
    return b;
}

TEST(ReadFile, MissingFileNamesWhat) {
    try {
        read_file("/nonexistent/w.exai", "weight file");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_EQ(std::string(e.what()), "weight file not found: /nonexistent/w.exai");
    }
}

TEST(WriteFile, RoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "exai_io_test.bin";
    const auto data = bytes_of(std::string("abc\0def", 7));
    write_file(path, data);
    EXPECT_EQ(read_file(path), data);
    std::filesystem::remove(path);
    EXPECT_THROW(write_file("/nonexistent/dir/x", data), IoError);
}

TEST(DecodeImage, Ppm) {
    auto b = bytes_of("P6\n# comment\n2 1\n255\n");
    for (int v : {0, 255, 51, 102, 153, 204}) b.push_back(std::byte(v));
    const auto img = decode_image(b, Shape{3, 1, 2});
    EXPECT_EQ(img.at(0, 0, 0), 0.0);
    EXPECT_EQ(img.at(1, 0, 0), 1.0);
    EXPECT_EQ(img.at(2, 0, 0), 0.2);
    EXPECT_EQ(img.at(0, 0, 1), 0.4);
    EXPECT_EQ(img.at(2, 0, 1), 0.8);
    EXPECT_THROW(decode_image(b, Shape{3, 2, 2}), ValidationError);
    auto truncated = b;
    truncated.pop_back();
    EXPECT_THROW(decode_image(truncated, Shape{3, 1, 2}), ParseError);
    auto deep = bytes_of("P6 2 1 65535\n");
    EXPECT_THROW(decode_image(deep, Shape{3, 1, 2}), ParseError);
}

TEST(DecodeImage, RawFloat) {
    FloatTensor t(Shape{3, 2, 2}, std::vector<double>{0, 0.5, -1, 2, 3, 4, 5, 6, 7, 8, 9, 0.25});
    const auto b = encode_f32(t);
    ASSERT_EQ(b.size(), 48u);
    EXPECT_EQ(decode_image(b, t.shape()), t);
    EXPECT_THROW(decode_image(std::span(b).first(44), t.shape()), ValidationError);
    // little-endian: 0.5f = 0x3f000000
    EXPECT_EQ(std::to_integer<int>(b[4 + 3]), 0x3f);
    EXPECT_EQ(std::to_integer<int>(b[4]), 0);
}

TEST(Pgm, HeaderAndRoundTrip) {
    Heatmap hm{32, 32, std::vector<std::uint8_t>(1024)};
    for (std::size_t i = 0; i < 1024; ++i) hm.pixels[i] = static_cast<std::uint8_t>(i * 7);
    const auto b = encode_pgm(hm);
    const std::string head(reinterpret_cast<const char*>(b.data()), 13);
    EXPECT_EQ(head, "P5\n32 32\n255\n");
    EXPECT_EQ(b.size(), 13u + 1024);
    const auto back = decode_pgm(b);
    EXPECT_EQ(back.width, 32u);
    EXPECT_EQ(back.height, 32u);
    EXPECT_EQ(back.pixels, hm.pixels);
    EXPECT_THROW(decode_pgm(bytes_of("P2\n1 1\n255\n0")), ParseError);
}

TEST(SampleImages, ShippedPpmsDecode) {
    const auto dir = testing::source_dir() / "data/cifar10";
    if (!std::filesystem::exists(dir / "test_000.ppm")) GTEST_SKIP() << "sample images not present";
    const auto img = decode_image(read_file(dir / "test_000.ppm"), Shape{3, 32, 32});
    for (double v : img.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

}  // namespace
}  // namespace exai
