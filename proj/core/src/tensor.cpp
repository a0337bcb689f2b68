// SPDX-License-Identifier: Apache-2.0
#include "exai/tensor.hpp"

namespace exai {

std::string Shape::to_string() const {
    return "[" + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
}

Tensor quantize_tensor(const FloatTensor& t, FxpFormat fmt, QuantStats* stats) {
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = quantize(t[i], fmt, stats);
    return out;
}

FloatTensor dequantize_tensor(const Tensor& t, FxpFormat fmt) {
    FloatTensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = dequantize(t[i], fmt);
    return out;
}

}  // namespace exai
