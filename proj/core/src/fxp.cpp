// SPDX-License-Identifier: Apache-2.0
#include "exai/fxp.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "exai/error.hpp"

namespace exai {

namespace {

constexpr std::int64_t kAccMax = std::numeric_limits<std::int32_t>::max();
constexpr std::int64_t kAccMin = std::numeric_limits<std::int32_t>::min();

Acc32 saturate_acc(std::int64_t wide, bool overflow) noexcept {
    if (wide > kAccMax) return Acc32{static_cast<std::int32_t>(kAccMax), true};
    if (wide < kAccMin) return Acc32{static_cast<std::int32_t>(kAccMin), true};
    return Acc32{static_cast<std::int32_t>(wide), overflow};
}

std::int16_t clamp16(std::int64_t v, bool& sat) noexcept {
    if (v > INT16_MAX) {
        sat = true;
        return INT16_MAX;
    }
    if (v < INT16_MIN) {
        sat = true;
        return INT16_MIN;
    }
    return static_cast<std::int16_t>(v);
}

}  // namespace

double FxpFormat::epsilon() const noexcept { return std::ldexp(1.0, -frac_bits); }

double FxpFormat::max_value() const noexcept { return INT16_MAX * epsilon(); }

double FxpFormat::min_value() const noexcept { return INT16_MIN * epsilon(); }

FxpFormat FxpFormat::parse(std::string_view text) {
    const auto fail = [&] {
        return ParseError("invalid fixed-point format '" + std::string(text) +
                          "' (expected qI.F with I+F=16)");
    };
    if (text.size() < 4 || (text[0] != 'q' && text[0] != 'Q')) throw fail();
    const auto dot = text.find('.');
    if (dot == std::string_view::npos) throw fail();
    int ib = -1;
    int fb = -1;
    const char* b = text.data();
    auto r1 = std::from_chars(b + 1, b + dot, ib);
    auto r2 = std::from_chars(b + dot + 1, b + text.size(), fb);
    if (r1.ec != std::errc{} || r1.ptr != b + dot || r2.ec != std::errc{} ||
        r2.ptr != b + text.size())
        throw fail();
    FxpFormat fmt{fb};
    if (ib < 1 || ib + fb != kTotalBits || !fmt.valid()) throw fail();
    return fmt;
}

std::string FxpFormat::to_string() const {
    return "q" + std::to_string(int_bits()) + "." + std::to_string(frac_bits);
}

Fxp16 quantize(double x, FxpFormat fmt, QuantStats* stats) noexcept {
    bool sat = false;
    std::int16_t raw = 0;
    if (std::isnan(x)) {
        sat = true;
    } else {
        const double scaled = std::ldexp(x, fmt.frac_bits);
        if (scaled >= static_cast<double>(INT16_MAX)) {
            raw = INT16_MAX;
            sat = scaled > INT16_MAX + 0.5;
        } else if (scaled <= static_cast<double>(INT16_MIN)) {
            raw = INT16_MIN;
            sat = scaled < INT16_MIN - 0.5;
        } else {
            // default FP environment rounds to nearest, ties to even
            raw = clamp16(static_cast<std::int64_t>(std::nearbyint(scaled)), sat);
        }
    }
    if (stats) {
        ++stats->total;
        if (sat) ++stats->saturated;
    }
    return Fxp16{raw};
}

double dequantize(Fxp16 v, FxpFormat fmt) noexcept { return std::ldexp(double(v.raw), -fmt.frac_bits); }

Acc32 mac(Acc32 acc, Fxp16 a, Fxp16 b) noexcept {
    const std::int64_t wide = std::int64_t{acc.raw} + std::int64_t{a.raw} * std::int64_t{b.raw};
    return saturate_acc(wide, acc.overflow);
}

Acc32 add_aligned(Acc32 acc, Fxp16 v, FxpFormat fmt) noexcept {
    const std::int64_t wide = std::int64_t{acc.raw} + (std::int64_t{v.raw} << fmt.frac_bits);
    return saturate_acc(wide, acc.overflow);
}

Fxp16 requantize(Acc32 acc, FxpFormat fmt, bool* saturated) noexcept {
    const int f = fmt.frac_bits;
    std::int64_t q = std::int64_t{acc.raw} >> f;  // floor
    if (f > 0) {
        const std::int64_t rem = std::int64_t{acc.raw} - (q << f);
        const std::int64_t half = std::int64_t{1} << (f - 1);
        if (rem > half || (rem == half && (q & 1) != 0)) ++q;
    }
    bool sat = false;
    const auto raw = clamp16(q, sat);
    if (saturated) *saturated = sat;
    return Fxp16{raw};
}

}  // namespace exai
