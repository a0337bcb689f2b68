// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace exai {

/// One bit per activation element: 1 where the forward input was strictly positive.
class BitMask {
public:
    BitMask() = default;
    explicit BitMask(std::size_t n) : size_(n), words_((n + 63) / 64, 0) {}
    /// Packs a byte-per-element scratch buffer (nonzero = set).
    static BitMask pack(std::span<const std::uint8_t> bits);

    std::size_t size() const noexcept { return size_; }
    std::size_t storage_bits() const noexcept { return size_; }
    bool test(std::size_t i) const noexcept { return (words_[i / 64] >> (i % 64)) & 1u; }
    void set(std::size_t i, bool v) noexcept {
        const std::uint64_t bit = std::uint64_t{1} << (i % 64);
        if (v)
            words_[i / 64] |= bit;
        else
            words_[i / 64] &= ~bit;
    }
    std::size_t popcount() const noexcept;

    friend bool operator==(const BitMask&, const BitMask&) = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Two bits per pooled element: argmax position inside its 2x2 window,
/// row-major (0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right).
class PoolIndexMask {
public:
    PoolIndexMask() = default;
    explicit PoolIndexMask(std::size_t n) : size_(n), words_((n + 31) / 32, 0) {}
    static PoolIndexMask pack(std::span<const std::uint8_t> indices);

    std::size_t size() const noexcept { return size_; }
    std::size_t storage_bits() const noexcept { return 2 * size_; }
    unsigned get(std::size_t i) const noexcept {
        return static_cast<unsigned>((words_[i / 32] >> (2 * (i % 32))) & 3u);
    }
    void set(std::size_t i, unsigned idx) noexcept {
        const unsigned shift = 2 * (i % 32);
        words_[i / 32] = (words_[i / 32] & ~(std::uint64_t{3} << shift)) | (std::uint64_t{idx & 3u} << shift);
    }

    friend bool operator==(const PoolIndexMask&, const PoolIndexMask&) = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Masks cached during the forward pass, indexed by layer position.
struct MaskStore {
    std::vector<std::optional<BitMask>> relu;
    std::vector<std::optional<PoolIndexMask>> pool;

    explicit MaskStore(std::size_t layers = 0) : relu(layers), pool(layers) {}

    std::size_t relu_mask_count() const noexcept;
    /// Bits actually held (1 per ReLU element, 2 per pooled element).
    std::size_t total_bits() const noexcept;

    friend bool operator==(const MaskStore&, const MaskStore&) = default;
};

}  // namespace exai
