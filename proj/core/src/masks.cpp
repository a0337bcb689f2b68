// SPDX-License-Identifier: Apache-2.0
#include "exai/masks.hpp"

#include <bit>

namespace exai {

BitMask BitMask::pack(std::span<const std::uint8_t> bits) {
    BitMask m(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) m.set(i, true);
    return m;
}

std::size_t BitMask::popcount() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

PoolIndexMask PoolIndexMask::pack(std::span<const std::uint8_t> indices) {
    PoolIndexMask m(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) m.set(i, indices[i]);
    return m;
}

std::size_t MaskStore::relu_mask_count() const noexcept {
    std::size_t n = 0;
    for (const auto& m : relu) n += m.has_value() ? 1 : 0;
    return n;
}

std::size_t MaskStore::total_bits() const noexcept {
    std::size_t bits = 0;
    for (const auto& m : relu)
        if (m) bits += m->storage_bits();
    for (const auto& m : pool)
        if (m) bits += m->storage_bits();
    return bits;
}

}  // namespace exai
