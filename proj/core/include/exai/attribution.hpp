// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exai/backward.hpp"
#include "exai/costmodel.hpp"
#include "exai/datapath.hpp"
#include "exai/forward.hpp"
#include "exai/method.hpp"
#include "exai/model.hpp"
#include "exai/tensor.hpp"

namespace exai {

/// Index of the largest value; ties resolve to the lowest index.
template <class V>
std::size_t argmax(const BasicTensor<V>& t) {
    if (t.empty()) throw ValidationError("argmax of an empty tensor");
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] > t[best]) best = i;
    return best;
}

/// One-hot gradient at the selected output class.
template <class DP>
TensorOf<DP> seed_gradient(const DP& dp, const TensorOf<DP>& logits, std::size_t c) {
    if (c >= logits.size())
        throw ValidationError("class index " + std::to_string(c) + " out of range for " +
                              std::to_string(logits.size()) + " outputs");
    TensorOf<DP> g(logits.shape(), DP::zero());
    g[c] = dp.from_real(1.0);
    return g;
}

/// Fraction of exactly-zero elements.
template <class V>
double sparsity(const BasicTensor<V>& t) {
    if (t.empty()) throw ValidationError("sparsity of an empty tensor");
    std::size_t zeros = 0;
    for (const V& v : t.values()) zeros += v == V{} ? 1 : 0;
    return double(zeros) / double(t.size());
}

/// Gradient after one BP stage.
template <class V>
struct BpStep {
    std::size_t layer = 0;
    std::string_view stage;  // "vmm_bp", "relu_bp", "unpool_bp", "conv2d_bp"
    BasicTensor<V> grad;
    KernelStats stats;
};

template <class V>
struct AttributionTrace {
    ForwardResult<V> forward;
    std::size_t class_index = 0;
    BasicTensor<V> relevance;   // gradient at the network input
    std::vector<BpStep<V>> steps;  // in execution order; the last one yields `relevance`
};

/// FP, class selection (argmax unless overridden), one-hot seed, then the
/// layers in reverse with the method's ReLU rule.
template <class DP>
AttributionTrace<typename DP::value_type> run_attribution(const DP& dp, const NetworkSpec& net,
                                                          const BasicWeightStore<typename DP::value_type>& w,
                                                          const TensorOf<DP>& image, AttributionMethod method,
                                                          const TileConfig& tiles,
                                                          std::optional<std::size_t> class_override = std::nullopt,
                                                          unsigned threads = 1);

/// Zero fraction across all BP intermediates (every step except the final
/// input-level map).
template <class V>
double intermediate_sparsity(const AttributionTrace<V>& trace) {
    std::size_t zeros = 0, total = 0;
    for (std::size_t s = 0; s + 1 < trace.steps.size(); ++s) {
        const auto& g = trace.steps[s].grad;
        for (const V& v : g.values()) zeros += v == V{} ? 1 : 0;
        total += g.size();
    }
    return total ? double(zeros) / double(total) : 0.0;
}

/// Relevance over the input pixels, signed.
struct RelevanceMap {
    Tensor values;
    FxpFormat fmt = kQ8_8;
    AttributionMethod method = AttributionMethod::SaliencyMap;
    std::size_t class_index = 0;

    FloatTensor real() const { return dequantize_tensor(values, fmt); }
};

struct LayerGradStats {
    std::size_t layer = 0;
    LayerKind kind = LayerKind::ReLU;
    std::size_t saturations = 0;
};

struct AttributionResult {
    RelevanceMap relevance;
    Tensor logits;
    std::size_t class_index = 0;
    CostReport cost;
    std::vector<LayerGradStats> grad_saturations;  // one entry per layer, network order
    double intermediate_sparsity = 0.0;
};

struct AttributeOptions {
    std::optional<std::size_t> class_override;
    unsigned threads = 1;
};

/// Fixed-point attribution plus the matching cost report.
AttributionResult attribute(const FixedDatapath& dp, const NetworkSpec& net, const WeightStore& w, const Tensor& image,
                            AttributionMethod method, const TileConfig& tiles, const AttributeOptions& opts = {});

enum class ChannelReduction { MaxAbs, SumAbs, SignedSum };

ChannelReduction parse_reduction(std::string_view text);

struct Heatmap {
    std::size_t height = 0, width = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

/// Collapses channels, then maps [min, max] linearly onto [0, 255]
/// (rounded to nearest); a constant map renders as 128 everywhere.
Heatmap to_heatmap(const FloatTensor& relevance, ChannelReduction reduction = ChannelReduction::MaxAbs);
inline Heatmap to_heatmap(const RelevanceMap& r, ChannelReduction reduction = ChannelReduction::MaxAbs) {
    return to_heatmap(r.real(), reduction);
}

// ---------------------------------------------------------------------------

template <class DP>
AttributionTrace<typename DP::value_type> run_attribution(const DP& dp, const NetworkSpec& net,
                                                          const BasicWeightStore<typename DP::value_type>& w,
                                                          const TensorOf<DP>& image, AttributionMethod method,
                                                          const TileConfig& tiles,
                                                          std::optional<std::size_t> class_override,
                                                          unsigned threads) {
    using V = typename DP::value_type;
    AttributionTrace<V> t;
    t.forward = forward_pass(dp, net, w, image, tiles, method, threads);
    t.class_index = class_override ? *class_override : argmax(t.forward.logits);
    BasicTensor<V> g = seed_gradient(dp, t.forward.logits, t.class_index);

    const MaskStore& masks = t.forward.masks;
    const auto relu_mask = [&](std::size_t i) -> const BitMask* {
        return masks.relu[i] ? &*masks.relu[i] : nullptr;
    };
    const auto push = [&](std::size_t layer, std::string_view stage, KernelStats st = {}) {
        t.steps.push_back(BpStep<V>{layer, stage, g, st});
    };

    for (std::size_t i = net.size(); i-- > 0;) {
        const LayerSpec& l = net.layer(i);
        switch (l.kind) {
            case LayerKind::FC: {
                KernelStats st;
                g = vmm_bp(dp, g, w.fc(i), tiles, threads, &st).reshaped(net.input_of(i));
                push(i, "vmm_bp", st);
                break;
            }
            case LayerKind::ReLU:
                g = relu_bp(method, g, relu_mask(i));
                push(i, "relu_bp");
                break;
            case LayerKind::MaxPool2d:
                if (!masks.pool[i]) throw ValidationError("pooling index mask missing for layer " + std::to_string(i));
                g = unpool_bp(g, *masks.pool[i]);
                push(i, "unpool_bp");
                break;
            case LayerKind::Conv2d: {
                if (l.fused_relu) {
                    g = relu_bp(method, g, relu_mask(i));
                    push(i, "relu_bp");
                }
                KernelStats st;
                g = conv2d_bp(dp, g, w.conv(i), tiles, threads, &st);
                push(i, "conv2d_bp", st);
                break;
            }
        }
    }
    t.relevance = std::move(g);
    return t;
}

}  // namespace exai
