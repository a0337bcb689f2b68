// SPDX-License-Identifier: Apache-2.0
#include "exai/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace exai {

namespace {

// Whitespace-separated header tokens of a PNM file, skipping '#' comments.
class PnmHeader {
public:
    explicit PnmHeader(std::span<const std::byte> b) : b_(b) {}

    std::string token() {
        skip();
        std::string tok;
        while (pos_ < b_.size() && !space(ch())) tok.push_back(static_cast<char>(b_[pos_++]));
        if (tok.empty()) throw ParseError("image: truncated PNM header");
        return tok;
    }
    std::size_t number() {
        const std::string t = token();
        if (t.find_first_not_of("0123456789") != std::string::npos) throw ParseError("image: bad PNM header field '" + t + "'");
        return std::stoul(t);
    }
    // Exactly one whitespace byte separates the header from the raster.
    std::size_t raster_offset() {
        if (pos_ >= b_.size() || !space(ch())) throw ParseError("image: missing raster after PNM header");
        return pos_ + 1;
    }

private:
    char ch() const { return static_cast<char>(b_[pos_]); }
    static bool space(char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; }
    void skip() {
        while (pos_ < b_.size()) {
            if (space(ch())) {
                ++pos_;
            } else if (ch() == '#') {
                while (pos_ < b_.size() && ch() != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::byte> b_;
    std::size_t pos_ = 0;
};

void put_f32(std::vector<std::byte>& out, float f) {
    auto u = std::bit_cast<std::uint32_t>(f);
    for (int k = 0; k < 4; ++k) out.push_back(std::byte(static_cast<unsigned char>(u >> (8 * k))));
}

}  // namespace

std::vector<std::byte> read_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string(what) + " not found: " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> out(buf.size());
    std::memcpy(out.data(), buf.data(), buf.size());
    return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

FloatTensor decode_image(std::span<const std::byte> bytes, Shape dims) {
    FloatTensor img(dims);
    if (bytes.size() >= 2 && char(bytes[0]) == 'P' && char(bytes[1]) == '6') {
        PnmHeader hdr(bytes);
        hdr.token();
        const std::size_t w = hdr.number(), h = hdr.number(), maxval = hdr.number();
        if (maxval != 255) throw ParseError("image: only 8-bit PPM (maxval 255) is supported");
        if (dims.c != 3 || h != dims.h || w != dims.w)
            throw ValidationError("image: PPM is " + std::to_string(w) + "x" + std::to_string(h) +
                                  " RGB, network expects " + dims.to_string());
        const std::size_t off = hdr.raster_offset();
        if (bytes.size() - off < 3 * w * h) throw ParseError("image: truncated PPM raster");
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t c = 0; c < 3; ++c)
                    img.at(c, y, x) = double(std::to_integer<unsigned>(bytes[off + (y * w + x) * 3 + c])) / 255.0;
        return img;
    }
    if (bytes.size() != dims.size() * 4)
        throw ValidationError("image: raw float32 file has " + std::to_string(bytes.size()) + " bytes, expected " +
                              std::to_string(dims.size() * 4) + " for " + dims.to_string());
    const auto vals = decode_f32(bytes);
    for (std::size_t i = 0; i < vals.size(); ++i) img[i] = vals[i];
    return img;
}

std::vector<std::byte> encode_pgm(const Heatmap& hm) {
    const std::string hdr = "P5\n" + std::to_string(hm.width) + " " + std::to_string(hm.height) + "\n255\n";
    std::vector<std::byte> out;
    out.reserve(hdr.size() + hm.pixels.size());
    for (char c : hdr) out.push_back(std::byte(static_cast<unsigned char>(c)));
    for (auto p : hm.pixels) out.push_back(std::byte(p));
    return out;
}

Heatmap decode_pgm(std::span<const std::byte> bytes) {
    PnmHeader hdr(bytes);
    if (hdr.token() != "P5") throw ParseError("heatmap: not a binary PGM");
    Heatmap hm;
    hm.width = hdr.number();
    hm.height = hdr.number();
    if (hdr.number() != 255) throw ParseError("heatmap: maxval must be 255");
    const std::size_t off = hdr.raster_offset();
    if (bytes.size() - off != hm.width * hm.height) throw ParseError("heatmap: raster size mismatch");
    hm.pixels.resize(hm.width * hm.height);
    for (std::size_t i = 0; i < hm.pixels.size(); ++i) hm.pixels[i] = std::to_integer<std::uint8_t>(bytes[off + i]);
    return hm;
}

std::vector<std::byte> encode_f32(const FloatTensor& t) {
    std::vector<std::byte> out;
    out.reserve(t.size() * 4);
    for (double v : t.values()) put_f32(out, static_cast<float>(v));
    return out;
}

std::vector<float> decode_f32(std::span<const std::byte> bytes) {
    if (bytes.size() % 4 != 0) throw ParseError("float32 payload length is not a multiple of 4");
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k) u |= std::uint32_t(std::to_integer<unsigned>(bytes[4 * i + k])) << (8 * k);
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

}  // namespace exai
