// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "exai/fxp.hpp"

namespace exai {

/// Saturation events observed by a kernel invocation.
struct KernelStats {
    std::size_t acc_overflows = 0;     // output elements whose accumulator saturated
    std::size_t store_saturations = 0; // output elements clipped to 16 bits at store

    std::size_t total() const noexcept { return acc_overflows + store_saturations; }

    KernelStats& operator+=(const KernelStats& o) noexcept {
        acc_overflows += o.acc_overflows;
        store_saturations += o.store_saturations;
        return *this;
    }
};

/// Arithmetic of the accelerator: 16-bit operands, 32-bit accumulator,
/// one requantization when an output element is stored.
struct FixedDatapath {
    using value_type = Fxp16;
    using acc_type = Acc32;

    FxpFormat fmt = kQ8_8;

    acc_type zero_acc() const noexcept { return {}; }
    void mac(acc_type& acc, value_type a, value_type b) const noexcept { acc = exai::mac(acc, a, b); }
    void add_bias(acc_type& acc, value_type b) const noexcept { acc = add_aligned(acc, b, fmt); }
    value_type store(acc_type acc, KernelStats& stats) const noexcept {
        bool sat = false;
        const value_type v = requantize(acc, fmt, &sat);
        if (acc.overflow) ++stats.acc_overflows;
        if (sat) ++stats.store_saturations;
        return v;
    }
    value_type from_real(double x) const noexcept { return quantize(x, fmt); }
    double to_real(value_type v) const noexcept { return dequantize(v, fmt); }
    static constexpr value_type zero() noexcept { return {}; }
    static constexpr bool positive(value_type v) noexcept { return v.raw > 0; }
};

/// Same kernels in double precision; used to check the gradient chain
/// against finite differences without quantization noise.
struct FloatDatapath {
    using value_type = double;
    using acc_type = double;

    acc_type zero_acc() const noexcept { return 0.0; }
    void mac(acc_type& acc, value_type a, value_type b) const noexcept { acc += a * b; }
    void add_bias(acc_type& acc, value_type b) const noexcept { acc += b; }
    value_type store(acc_type acc, KernelStats&) const noexcept { return acc; }
    value_type from_real(double x) const noexcept { return x; }
    double to_real(value_type v) const noexcept { return v; }
    static constexpr value_type zero() noexcept { return 0.0; }
    static constexpr bool positive(value_type v) noexcept { return v > 0.0; }
};

}  // namespace exai
