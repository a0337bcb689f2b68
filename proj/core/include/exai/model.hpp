// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "exai/fxp.hpp"
#include "exai/tensor.hpp"

namespace exai {

enum class LayerKind : std::uint8_t { Conv2d, MaxPool2d, FC, ReLU };

std::string_view to_string(LayerKind kind) noexcept;

/// One entry of the layer sequence. Only the fields of the layer's kind are
/// meaningful. Convolutions are stride 1 with "same" zero padding; pooling is
/// 2x2 with stride 2.
struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;

    // Conv2d
    std::size_t in_ch = 0;
    std::size_t out_ch = 0;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t pad = 1;
    bool fused_relu = false;

    // MaxPool2d
    std::size_t window = 2;
    std::size_t pool_stride = 2;

    // FC
    std::size_t in_features = 0;
    std::size_t out_features = 0;

    static LayerSpec conv(std::size_t in_ch, std::size_t out_ch, bool fused_relu = false,
                          std::size_t kernel = 3);
    static LayerSpec maxpool();
    static LayerSpec fc(std::size_t in_features, std::size_t out_features);
    static LayerSpec relu();

    bool has_params() const noexcept { return kind == LayerKind::Conv2d || kind == LayerKind::FC; }
    /// True for ReLU layers and for convolutions with a fused ReLU.
    bool is_relu_site() const noexcept {
        return kind == LayerKind::ReLU || (kind == LayerKind::Conv2d && fused_relu);
    }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Number of trainable values (weights + biases). Zero for parameterless layers.
std::size_t param_count(const LayerSpec& layer) noexcept;

/// Validated, immutable layer sequence.
class NetworkSpec {
public:
    static constexpr std::size_t kNumClasses = 10;

    NetworkSpec() = default;
    /// Checks shape-chain consistency; throws ValidationError naming the layer.
    NetworkSpec(Shape input_dims, std::vector<LayerSpec> layers, FxpFormat fmt = kQ8_8);

    const Shape& input_dims() const noexcept { return input_; }
    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
    std::size_t size() const noexcept { return layers_.size(); }
    bool empty() const noexcept { return layers_.empty(); }
    FxpFormat fxp_format() const noexcept { return fmt_; }

    Shape input_of(std::size_t i) const { return shapes_.at(i); }
    Shape output_of(std::size_t i) const { return shapes_.at(i + 1); }
    Shape output_dims() const { return shapes_.back(); }

    std::size_t total_params() const noexcept;

    /// Nine-layer CIFAR-10 reference network (conv ReLUs fused when requested).
    static NetworkSpec cifar10(bool conv_relu = false);

private:
    Shape input_{};
    std::vector<LayerSpec> layers_;
    FxpFormat fmt_ = kQ8_8;
    std::vector<Shape> shapes_{Shape{}};
};

/// Parses the JSON network config. Requires a non-empty layer list ending in
/// `kNumClasses` outputs.
NetworkSpec load_network(std::string_view config_text);
std::string network_to_json(const NetworkSpec& net);

struct ConvDims {
    std::size_t oc = 0, ic = 0, kh = 0, kw = 0;
    constexpr std::size_t size() const noexcept { return oc * ic * kh * kw; }
    friend constexpr bool operator==(ConvDims, ConvDims) = default;
};

template <class T>
struct ConvParams {
    ConvDims dims;
    std::vector<T> weights;  // (oc, ic, kh, kw) row-major
    std::vector<T> bias;     // oc

    const T& w(std::size_t o, std::size_t i, std::size_t y, std::size_t x) const noexcept {
        return weights[((o * dims.ic + i) * dims.kh + y) * dims.kw + x];
    }
    T& w(std::size_t o, std::size_t i, std::size_t y, std::size_t x) noexcept {
        return weights[((o * dims.ic + i) * dims.kh + y) * dims.kw + x];
    }
    friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

template <class T>
struct FcParams {
    std::size_t out = 0, in = 0;
    std::vector<T> weights;  // (out, in) row-major
    std::vector<T> bias;     // out

    const T& w(std::size_t o, std::size_t i) const noexcept { return weights[o * in + i]; }
    T& w(std::size_t o, std::size_t i) noexcept { return weights[o * in + i]; }
    friend bool operator==(const FcParams&, const FcParams&) = default;
};

template <class T>
using LayerParams = std::variant<std::monostate, ConvParams<T>, FcParams<T>>;

/// Parameters indexed by layer position; parameterless layers hold monostate.
template <class T>
class BasicWeightStore {
public:
    BasicWeightStore() = default;
    explicit BasicWeightStore(std::vector<LayerParams<T>> layers) : layers_(std::move(layers)) {}

    std::size_t size() const noexcept { return layers_.size(); }
    const LayerParams<T>& layer(std::size_t i) const { return layers_.at(i); }
    LayerParams<T>& layer(std::size_t i) { return layers_.at(i); }

    const ConvParams<T>& conv(std::size_t i) const;
    const FcParams<T>& fc(std::size_t i) const;
    ConvParams<T>& conv(std::size_t i) {
        return const_cast<ConvParams<T>&>(std::as_const(*this).conv(i));
    }
    FcParams<T>& fc(std::size_t i) { return const_cast<FcParams<T>&>(std::as_const(*this).fc(i)); }

    /// Applies `f` to every weight and bias, producing a store of another element type.
    template <class F>
    auto map(F&& f) const -> BasicWeightStore<decltype(f(std::declval<const T&>()))>;

    friend bool operator==(const BasicWeightStore&, const BasicWeightStore&) = default;

private:
    std::vector<LayerParams<T>> layers_;
};

using WeightStore = BasicWeightStore<Fxp16>;
using FloatWeights = BasicWeightStore<double>;

/// All-zero parameters shaped for `net`.
FloatWeights zero_weights(const NetworkSpec& net);
/// Throws ValidationError if `w` does not match `net`'s parameter shapes.
template <class T>
void check_weights(const NetworkSpec& net, const BasicWeightStore<T>& w);

/// Decodes an EXAI weight file (float32 payload) without quantizing.
FloatWeights read_weight_file(std::span<const std::byte> bytes, const NetworkSpec& net);
std::vector<std::byte> write_weight_file(const FloatWeights& w, const NetworkSpec& net);

WeightStore quantize_weights(const FloatWeights& w, FxpFormat fmt, QuantStats* stats = nullptr);
FloatWeights dequantize_weights(const WeightStore& w, FxpFormat fmt);

struct LoadedWeights {
    WeightStore weights;
    QuantStats stats;
};

/// Decodes and quantizes in one pass.
LoadedWeights load_weights(std::span<const std::byte> bytes, const NetworkSpec& net, FxpFormat fmt);

// ---------------------------------------------------------------------------

template <class T>
const ConvParams<T>& BasicWeightStore<T>::conv(std::size_t i) const {
    const auto* p = std::get_if<ConvParams<T>>(&layers_.at(i));
    if (!p) throw ValidationError("layer " + std::to_string(i) + " has no convolution parameters");
    return *p;
}

template <class T>
const FcParams<T>& BasicWeightStore<T>::fc(std::size_t i) const {
    const auto* p = std::get_if<FcParams<T>>(&layers_.at(i));
    if (!p) throw ValidationError("layer " + std::to_string(i) + " has no FC parameters");
    return *p;
}

template <class T>
template <class F>
auto BasicWeightStore<T>::map(F&& f) const
    -> BasicWeightStore<decltype(f(std::declval<const T&>()))> {
    using U = decltype(f(std::declval<const T&>()));
    const auto convert = [&](const std::vector<T>& src) {
        std::vector<U> dst;
        dst.reserve(src.size());
        for (const T& v : src) dst.push_back(f(v));
        return dst;
    };
    std::vector<LayerParams<U>> out;
    out.reserve(layers_.size());
    for (const auto& lp : layers_) {
        if (const auto* c = std::get_if<ConvParams<T>>(&lp))
            out.emplace_back(ConvParams<U>{c->dims, convert(c->weights), convert(c->bias)});
        else if (const auto* fc = std::get_if<FcParams<T>>(&lp))
            out.emplace_back(FcParams<U>{fc->out, fc->in, convert(fc->weights), convert(fc->bias)});
        else
            out.emplace_back(std::monostate{});
    }
    return BasicWeightStore<U>(std::move(out));
}

}  // namespace exai
