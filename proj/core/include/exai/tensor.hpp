// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "exai/error.hpp"
#include "exai/fxp.hpp"

namespace exai {

/// Channel/height/width extent. Flat vectors are {n, 1, 1}.
struct Shape {
    std::size_t c = 0;
    std::size_t h = 1;
    std::size_t w = 1;

    static constexpr Shape flat(std::size_t n) noexcept { return Shape{n, 1, 1}; }

    constexpr std::size_t size() const noexcept { return c * h * w; }
    constexpr bool is_flat() const noexcept { return h == 1 && w == 1; }

    std::string to_string() const;

    friend constexpr bool operator==(Shape, Shape) = default;
};

/// Dense CHW array (channel-major, then rows, then columns).
template <class T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(Shape shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}
    BasicTensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.size())
            throw ValidationError("tensor data length " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_.to_string());
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t index(std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return (c * shape_.h + y) * shape_.w + x;
    }
    T& at(std::size_t c, std::size_t y, std::size_t x) noexcept { return data_[index(c, y, x)]; }
    const T& at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return data_[index(c, y, x)];
    }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    /// Same elements, new extent. Element counts must agree.
    BasicTensor reshaped(Shape s) const& {
        if (s.size() != shape_.size())
            throw ValidationError("cannot reshape " + shape_.to_string() + " to " + s.to_string());
        return BasicTensor(s, data_);
    }
    BasicTensor reshaped(Shape s) && {
        if (s.size() != shape_.size())
            throw ValidationError("cannot reshape " + shape_.to_string() + " to " + s.to_string());
        return BasicTensor(s, std::move(data_));
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    Shape shape_{};
    std::vector<T> data_;
};

using Tensor = BasicTensor<Fxp16>;
using FloatTensor = BasicTensor<double>;

Tensor quantize_tensor(const FloatTensor& t, FxpFormat fmt, QuantStats* stats = nullptr);
FloatTensor dequantize_tensor(const Tensor& t, FxpFormat fmt);

}  // namespace exai
