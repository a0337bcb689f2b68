// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exai/datapath.hpp"
#include "exai/error.hpp"
#include "exai/forward.hpp"
#include "exai/kernels.hpp"
#include "exai/masks.hpp"
#include "exai/method.hpp"
#include "exai/model.hpp"
#include "exai/tensor.hpp"

namespace exai {

/// Swaps input/output channels and rotates each kernel by 180 degrees:
/// out[i][o][y][x] = w[o][i][KH-1-y][KW-1-x]. The bias becomes zero.
template <class V>
ConvParams<V> flip_transpose(const ConvParams<V>& w) {
    const ConvDims d = w.dims;
    ConvParams<V> out{ConvDims{d.ic, d.oc, d.kh, d.kw}, std::vector<V>(d.size()), std::vector<V>(d.ic, V{})};
    for (std::size_t o = 0; o < d.oc; ++o)
        for (std::size_t i = 0; i < d.ic; ++i)
            for (std::size_t y = 0; y < d.kh; ++y)
                for (std::size_t x = 0; x < d.kw; ++x) out.w(i, o, y, x) = w.w(o, i, d.kh - 1 - y, d.kw - 1 - x);
    return out;
}

/// Activation gradient of a convolution: the forward convolution block run
/// over `grad_out` with flipped-transposed weight loads and no bias.
template <class DP>
TensorOf<DP> conv2d_bp(const DP& dp, const TensorOf<DP>& grad_out, const ConvParams<typename DP::value_type>& w,
                       const TileConfig& tiles, unsigned threads = 1, KernelStats* stats = nullptr) {
    const ConvDims d = w.dims;
    if (grad_out.shape().c != d.oc || d.kh != d.kw)
        throw ValidationError("conv2d_bp: gradient " + grad_out.shape().to_string() + " does not match " +
                              std::to_string(d.oc) + " output channels");
    const std::size_t k = d.kh;
    return kernels::conv_block(
        dp, grad_out, d.ic, k,
        [&](std::size_t o, std::size_t i, std::size_t y, std::size_t x) { return w.w(i, o, k - 1 - y, k - 1 - x); },
        {}, tiles, threads, stats);
}

/// Activation gradient of an FC layer, grad_in[i] = sum_o M[o][i] * grad_out[o],
/// computed by the VMM block with the matrix loaded transposed.
template <class DP>
TensorOf<DP> vmm_bp(const DP& dp, const TensorOf<DP>& grad_out, const FcParams<typename DP::value_type>& m,
                    const TileConfig& tiles, unsigned threads = 1, KernelStats* stats = nullptr) {
    if (grad_out.size() != m.out)
        throw ValidationError("vmm_bp: gradient length " + std::to_string(grad_out.size()) + " != out_features " +
                              std::to_string(m.out));
    return kernels::vmm_block(
        dp, grad_out.values(), m.in, [&](std::size_t i, std::size_t o) { return m.w(o, i); }, {}, tiles, threads,
        stats);
}

namespace detail {
inline void check_mask(const BitMask* mask, std::size_t n, const char* who) {
    if (!mask) throw ValidationError(std::string(who) + ": ReLU mask missing for this method");
    if (mask->size() != n)
        throw ValidationError(std::string(who) + ": mask has " + std::to_string(mask->size()) + " bits, gradient has " +
                              std::to_string(n) + " elements");
}
}  // namespace detail

/// Vanilla gradient: pass where the forward activation was positive.
template <class V>
BasicTensor<V> relu_bp_saliency(const BasicTensor<V>& grad, const BitMask* mask) {
    detail::check_mask(mask, grad.size(), "relu_bp_saliency");
    BasicTensor<V> out(grad.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) out[i] = mask->test(i) ? grad[i] : V{};
    return out;
}

/// ReLU applied to the gradient itself; needs no forward state.
template <class V>
BasicTensor<V> relu_bp_deconvnet(const BasicTensor<V>& grad) {
    BasicTensor<V> out(grad.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) out[i] = grad[i] > V{} ? grad[i] : V{};
    return out;
}

/// Both gates: positive forward activation and positive gradient.
template <class V>
BasicTensor<V> relu_bp_guided(const BasicTensor<V>& grad, const BitMask* mask) {
    detail::check_mask(mask, grad.size(), "relu_bp_guided");
    BasicTensor<V> out(grad.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) out[i] = mask->test(i) && grad[i] > V{} ? grad[i] : V{};
    return out;
}

template <class V>
BasicTensor<V> relu_bp(AttributionMethod method, const BasicTensor<V>& grad, const BitMask* mask) {
    switch (method) {
        case AttributionMethod::SaliencyMap: return relu_bp_saliency(grad, mask);
        case AttributionMethod::DeconvNet: return relu_bp_deconvnet(grad);
        case AttributionMethod::GuidedBackprop: return relu_bp_guided(grad, mask);
    }
    throw ValidationError("relu_bp: unknown method");
}

/// Routes each pooled gradient to the argmax position cached during FP; the
/// other three window entries are zero. Output has twice the spatial size.
template <class V>
BasicTensor<V> unpool_bp(const BasicTensor<V>& grad, const PoolIndexMask& indices) {
    const Shape s = grad.shape();
    if (indices.size() != grad.size())
        throw ValidationError("unpool_bp: index mask has " + std::to_string(indices.size()) +
                              " entries, gradient has " + std::to_string(grad.size()));
    BasicTensor<V> out(Shape{s.c, s.h * 2, s.w * 2});
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t y = 0; y < s.h; ++y)
            for (std::size_t x = 0; x < s.w; ++x) {
                const unsigned k = indices.get(grad.index(c, y, x));
                out.at(c, 2 * y + k / 2, 2 * x + k % 2) = grad.at(c, y, x);
            }
    return out;
}

}  // namespace exai
