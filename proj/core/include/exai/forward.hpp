// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "exai/datapath.hpp"
#include "exai/kernels.hpp"
#include "exai/masks.hpp"
#include "exai/method.hpp"
#include "exai/model.hpp"
#include "exai/tensor.hpp"
#include "exai/tiling.hpp"

namespace exai {

template <class DP>
using TensorOf = BasicTensor<typename DP::value_type>;

/// Convolution FP: out = requantize(sum in * w + bias), zero-padded borders.
template <class DP>
TensorOf<DP> conv2d_fp(const DP& dp, const TensorOf<DP>& input, const ConvParams<typename DP::value_type>& p,
                       const TileConfig& tiles, unsigned threads = 1, KernelStats* stats = nullptr) {
    if (input.shape().c != p.dims.ic || p.dims.kh != p.dims.kw)
        throw ValidationError("conv2d_fp: input " + input.shape().to_string() + " does not match weights with " +
                              std::to_string(p.dims.ic) + " input channels");
    return kernels::conv_block(
        dp, input, p.dims.oc, p.dims.kh,
        [&](std::size_t o, std::size_t i, std::size_t y, std::size_t x) { return p.w(o, i, y, x); }, p.bias,
        tiles, threads, stats);
}

/// FC FP as a vector-matrix product.
template <class DP>
TensorOf<DP> vmm_fp(const DP& dp, const TensorOf<DP>& x, const FcParams<typename DP::value_type>& p,
                    const TileConfig& tiles, unsigned threads = 1, KernelStats* stats = nullptr) {
    if (x.size() != p.in)
        throw ValidationError("vmm_fp: input length " + std::to_string(x.size()) + " != in_features " +
                              std::to_string(p.in));
    return kernels::vmm_block(
        dp, x.values(), p.out, [&](std::size_t o, std::size_t i) { return p.w(o, i); }, p.bias, tiles, threads,
        stats);
}

template <class V>
struct ReluResult {
    BasicTensor<V> output;
    std::optional<BitMask> mask;
};

/// max(x, 0); the mask bit is set iff x > 0.
template <class V>
ReluResult<V> relu_fp(const BasicTensor<V>& x, bool record_mask) {
    ReluResult<V> r{BasicTensor<V>(x.shape()), std::nullopt};
    if (record_mask) r.mask.emplace(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool pos = x[i] > V{};
        r.output[i] = pos ? x[i] : V{};
        if (record_mask && pos) r.mask->set(i, true);
    }
    return r;
}

template <class V>
struct PoolResult {
    BasicTensor<V> output;
    PoolIndexMask indices;
};

/// 2x2 / stride-2 max pooling; ties keep the lowest window index.
template <class V>
PoolResult<V> maxpool_fp(const BasicTensor<V>& x) {
    const Shape s = x.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0) throw ValidationError("maxpool_fp: odd spatial dims " + s.to_string());
    PoolResult<V> r{BasicTensor<V>(Shape{s.c, s.h / 2, s.w / 2}), PoolIndexMask(s.c * (s.h / 2) * (s.w / 2))};
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t y = 0; y < s.h / 2; ++y)
            for (std::size_t xx = 0; xx < s.w / 2; ++xx) {
                unsigned best = 0;
                V v = x.at(c, 2 * y, 2 * xx);
                for (unsigned k = 1; k < 4; ++k) {
                    const V cand = x.at(c, 2 * y + k / 2, 2 * xx + k % 2);
                    if (cand > v) {
                        v = cand;
                        best = k;
                    }
                }
                r.output.at(c, y, xx) = v;
                r.indices.set(r.output.index(c, y, xx), best);
            }
    return r;
}

template <class V>
struct ForwardResult {
    BasicTensor<V> logits;
    MaskStore masks;
    /// Output of every layer (conv outputs after any fused ReLU); empty unless requested.
    std::vector<BasicTensor<V>> activations;
    std::vector<KernelStats> layer_stats;
};

/// Runs the layer sequence once. ReLU masks are recorded only when `method`
/// needs them; pooling index masks always. A pooling layer directly after a
/// convolution is folded into that convolution's tile store.
template <class DP>
ForwardResult<typename DP::value_type> forward_pass(const DP& dp, const NetworkSpec& net,
                                                    const BasicWeightStore<typename DP::value_type>& w,
                                                    const TensorOf<DP>& image, const TileConfig& tiles,
                                                    AttributionMethod method, unsigned threads = 1,
                                                    bool capture_activations = false);

// ---------------------------------------------------------------------------

namespace detail {

/// Convolution whose store path applies the fused ReLU and, when `pool` is
/// set, the following max-pool on each finished tile.
template <class DP>
struct FusedConvOutput {
    TensorOf<DP> conv;    // after ReLU
    TensorOf<DP> pooled;  // only when pooling
    std::optional<BitMask> relu_mask;
    std::optional<PoolIndexMask> pool_mask;
};

template <class DP>
FusedConvOutput<DP> conv_fused(const DP& dp, const TensorOf<DP>& in, const ConvParams<typename DP::value_type>& p,
                               bool relu, bool record_relu_mask, bool pool, TileConfig tiles, unsigned threads,
                               KernelStats* stats) {
    using V = typename DP::value_type;
    if (in.shape().c != p.dims.ic) throw ValidationError("conv: input channel mismatch");
    const Shape os{p.dims.oc, in.shape().h, in.shape().w};
    if (pool) {
        if (os.h % 2 || os.w % 2) throw ValidationError("maxpool: odd spatial dims " + os.to_string());
        // tiles must cover whole pooling windows
        tiles.t_oh += tiles.t_oh % 2;
        tiles.t_ow += tiles.t_ow % 2;
    }
    FusedConvOutput<DP> r;
    std::vector<std::uint8_t> relu_bits(relu && record_relu_mask ? os.size() : 0);
    std::vector<std::uint8_t> pool_idx;
    if (pool) {
        r.pooled = TensorOf<DP>(Shape{os.c, os.h / 2, os.w / 2});
        pool_idx.assign(r.pooled.size(), 0);
    }
    auto epilogue = [&](TensorOf<DP>& t, const kernels::TileBox& b) {
        if (relu)
            for (std::size_t c = b.c0; c < b.c1; ++c)
                for (std::size_t y = b.y0; y < b.y1; ++y)
                    for (std::size_t x = b.x0; x < b.x1; ++x) {
                        V& v = t.at(c, y, x);
                        const bool pos = v > V{};
                        if (!pos) v = V{};
                        if (!relu_bits.empty()) relu_bits[t.index(c, y, x)] = pos;
                    }
        if (pool)
            for (std::size_t c = b.c0; c < b.c1; ++c)
                for (std::size_t y = b.y0; y < b.y1; y += 2)
                    for (std::size_t x = b.x0; x < b.x1; x += 2) {
                        unsigned best = 0;
                        V v = t.at(c, y, x);
                        for (unsigned k = 1; k < 4; ++k) {
                            const V cand = t.at(c, y + k / 2, x + k % 2);
                            if (cand > v) {
                                v = cand;
                                best = k;
                            }
                        }
                        const std::size_t pi = r.pooled.index(c, y / 2, x / 2);
                        r.pooled[pi] = v;
                        pool_idx[pi] = static_cast<std::uint8_t>(best);
                    }
    };
    r.conv = kernels::conv_block(
        dp, in, p.dims.oc, p.dims.kh,
        [&](std::size_t o, std::size_t i, std::size_t y, std::size_t x) { return p.w(o, i, y, x); }, p.bias,
        tiles, threads, stats, epilogue);
    if (!relu_bits.empty()) r.relu_mask = BitMask::pack(relu_bits);
    if (pool) r.pool_mask = PoolIndexMask::pack(pool_idx);
    return r;
}

}  // namespace detail

template <class DP>
ForwardResult<typename DP::value_type> forward_pass(const DP& dp, const NetworkSpec& net,
                                                    const BasicWeightStore<typename DP::value_type>& w,
                                                    const TensorOf<DP>& image, const TileConfig& tiles,
                                                    AttributionMethod method, unsigned threads,
                                                    bool capture_activations) {
    if (image.shape() != net.input_dims())
        throw ValidationError("image dims " + image.shape().to_string() + " != network input " +
                              net.input_dims().to_string());
    check_weights(net, w);
    const bool relu_masks = needs_relu_mask(method);
    const std::size_t n = net.size();

    ForwardResult<typename DP::value_type> r{TensorOf<DP>{}, MaskStore(n), {}, std::vector<KernelStats>(n)};
    if (capture_activations) r.activations.resize(n);
    TensorOf<DP> x = image;
    for (std::size_t i = 0; i < n; ++i) {
        const LayerSpec& l = net.layer(i);
        switch (l.kind) {
            case LayerKind::Conv2d: {
                const bool fuse_pool = i + 1 < n && net.layer(i + 1).kind == LayerKind::MaxPool2d;
                auto f = detail::conv_fused(dp, x, w.conv(i), l.fused_relu, relu_masks, fuse_pool, tiles, threads,
                                            &r.layer_stats[i]);
                if (f.relu_mask) r.masks.relu[i] = std::move(f.relu_mask);
                if (fuse_pool) {
                    r.masks.pool[i + 1] = std::move(f.pool_mask);
                    if (capture_activations) {
                        r.activations[i] = std::move(f.conv);
                        r.activations[i + 1] = f.pooled;
                    }
                    x = std::move(f.pooled);
                    ++i;
                } else {
                    x = std::move(f.conv);
                    if (capture_activations) r.activations[i] = x;
                }
                continue;
            }
            case LayerKind::MaxPool2d: {
                auto p = maxpool_fp(x);
                r.masks.pool[i] = std::move(p.indices);
                x = std::move(p.output);
                break;
            }
            case LayerKind::FC:
                x = vmm_fp(dp, x, w.fc(i), tiles, threads, &r.layer_stats[i]);
                break;
            case LayerKind::ReLU: {
                auto a = relu_fp(x, relu_masks);
                if (a.mask) r.masks.relu[i] = std::move(a.mask);
                x = std::move(a.output);
                break;
            }
        }
        if (capture_activations) r.activations[i] = x;
    }
    r.logits = std::move(x);
    return r;
}

}  // namespace exai
