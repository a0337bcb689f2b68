// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace exai {

/// Q-format of a 16-bit fixed-point word: `frac_bits` fractional bits and
/// `16 - frac_bits` integer bits (sign included).
struct FxpFormat {
    static constexpr int kTotalBits = 16;

    int frac_bits = 8;

    constexpr int int_bits() const noexcept { return kTotalBits - frac_bits; }
    constexpr bool valid() const noexcept { return frac_bits >= 0 && frac_bits < kTotalBits; }

    /// Weight of one LSB, 2^-frac_bits.
    double epsilon() const noexcept;
    double max_value() const noexcept;
    double min_value() const noexcept;

    /// Parses "qI.F" (case-insensitive "q"); I + F must be 16.
    static FxpFormat parse(std::string_view text);
    std::string to_string() const;

    friend constexpr bool operator==(FxpFormat, FxpFormat) = default;
};

inline constexpr FxpFormat kQ8_8{8};

/// 16-bit signed fixed-point word. The format is ambient: it travels with the
/// datapath, not with every value.
struct Fxp16 {
    std::int16_t raw = 0;

    static constexpr Fxp16 from_raw(std::int16_t r) noexcept { return Fxp16{r}; }
    static constexpr Fxp16 max() noexcept { return Fxp16{INT16_MAX}; }
    static constexpr Fxp16 min() noexcept { return Fxp16{INT16_MIN}; }

    friend constexpr auto operator<=>(Fxp16, Fxp16) = default;
};

/// 32-bit accumulator at 2*frac_bits fractional precision. `overflow` is
/// sticky: once a MAC saturates it stays set.
struct Acc32 {
    std::int32_t raw = 0;
    bool overflow = false;

    friend constexpr bool operator==(Acc32, Acc32) = default;
};

/// Running count of saturated conversions.
struct QuantStats {
    std::size_t total = 0;
    std::size_t saturated = 0;

    QuantStats& operator+=(const QuantStats& o) noexcept {
        total += o.total;
        saturated += o.saturated;
        return *this;
    }
};

/// Round-to-nearest-even, saturating. NaN maps to 0 and counts as saturated.
Fxp16 quantize(double x, FxpFormat fmt, QuantStats* stats = nullptr) noexcept;
double dequantize(Fxp16 v, FxpFormat fmt) noexcept;

/// acc + a*b, exact until it leaves the int32 range, then saturates.
Acc32 mac(Acc32 acc, Fxp16 a, Fxp16 b) noexcept;

/// Adds a 16-bit value (same format as the MAC operands) into the
/// accumulator by aligning it to 2*frac_bits.
Acc32 add_aligned(Acc32 acc, Fxp16 v, FxpFormat fmt) noexcept;

/// Shift right by frac_bits with round-to-nearest-even, then saturate.
Fxp16 requantize(Acc32 acc, FxpFormat fmt, bool* saturated = nullptr) noexcept;

}  // namespace exai
