// SPDX-License-Identifier: Apache-2.0
#include "exai/model.hpp"

#include <bit>
#include <cstring>
#include <set>

#include <json.hpp>

#include "exai/error.hpp"

namespace exai {

namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'E', 'X', 'A', 'I'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kKindConv = 1;
constexpr std::uint8_t kKindFc = 2;

std::string where(std::size_t i) { return "layer " + std::to_string(i); }

Shape propagate(const LayerSpec& l, Shape in, std::size_t i) {
    switch (l.kind) {
        case LayerKind::Conv2d: {
            if (l.in_ch == 0 || l.out_ch == 0 || l.kernel == 0)
                throw ValidationError(where(i) + " (Conv2d): channel counts and kernel must be >= 1");
            if (l.stride != 1)
                throw ValidationError(where(i) + " (Conv2d): only stride 1 is supported");
            if (l.kernel % 2 == 0 || l.pad * 2 + 1 != l.kernel)
                throw ValidationError(where(i) + " (Conv2d): kernel " + std::to_string(l.kernel) +
                                      " with pad " + std::to_string(l.pad) +
                                      " does not preserve spatial size");
            if (in.c != l.in_ch)
                throw ValidationError(where(i) + " (Conv2d): expects " + std::to_string(l.in_ch) +
                                      " input channels but receives " + in.to_string());
            return Shape{l.out_ch, in.h, in.w};
        }
        case LayerKind::MaxPool2d:
            if (l.window != 2 || l.pool_stride != 2)
                throw ValidationError(where(i) + " (MaxPool2d): only 2x2 windows with stride 2 are supported");
            if (in.h % 2 != 0 || in.w % 2 != 0)
                throw ValidationError(where(i) + " (MaxPool2d): odd spatial input " + in.to_string());
            return Shape{in.c, in.h / 2, in.w / 2};
        case LayerKind::FC:
            if (l.in_features == 0 || l.out_features == 0)
                throw ValidationError(where(i) + " (FC): feature counts must be >= 1");
            if (in.size() != l.in_features)
                throw ValidationError(where(i) + " (FC): expects " + std::to_string(l.in_features) +
                                      " inputs but receives " + in.to_string());
            return Shape::flat(l.out_features);
        case LayerKind::ReLU:
            return in;
    }
    throw ValidationError(where(i) + ": unknown layer kind");
}

LayerKind parse_kind(const std::string& s, std::size_t i) {
    if (s == "Conv2d") return LayerKind::Conv2d;
    if (s == "MaxPool2d") return LayerKind::MaxPool2d;
    if (s == "FC") return LayerKind::FC;
    if (s == "ReLU") return LayerKind::ReLU;
    throw ParseError(where(i) + ": unknown kind '" + s + "'");
}

std::size_t get_size(const json& obj, const char* key, std::size_t fallback, std::size_t i) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned())
        throw ParseError(where(i) + ": '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

std::size_t require_size(const json& obj, const char* key, std::size_t i) {
    if (!obj.contains(key)) throw ParseError(where(i) + ": missing '" + key + "'");
    return get_size(obj, key, 0, i);
}

LayerSpec parse_layer(const json& obj, std::size_t i) {
    if (!obj.is_object()) throw ParseError(where(i) + ": expected an object");
    if (!obj.contains("kind") || !obj.at("kind").is_string())
        throw ParseError(where(i) + ": missing string 'kind'");
    LayerSpec l;
    l.kind = parse_kind(obj.at("kind").get<std::string>(), i);
    std::set<std::string> allowed{"kind"};
    switch (l.kind) {
        case LayerKind::Conv2d:
            allowed.insert({"in_ch", "out_ch", "kernel", "stride", "pad", "fused_relu"});
            l.in_ch = require_size(obj, "in_ch", i);
            l.out_ch = require_size(obj, "out_ch", i);
            l.kernel = get_size(obj, "kernel", 3, i);
            l.stride = get_size(obj, "stride", 1, i);
            l.pad = get_size(obj, "pad", (l.kernel - 1) / 2, i);
            if (obj.contains("fused_relu")) {
                if (!obj.at("fused_relu").is_boolean())
                    throw ParseError(where(i) + ": 'fused_relu' must be a boolean");
                l.fused_relu = obj.at("fused_relu").get<bool>();
            }
            break;
        case LayerKind::MaxPool2d:
            allowed.insert({"window", "stride"});
            l.window = get_size(obj, "window", 2, i);
            l.pool_stride = get_size(obj, "stride", 2, i);
            break;
        case LayerKind::FC:
            allowed.insert({"in_features", "out_features"});
            l.in_features = require_size(obj, "in_features", i);
            l.out_features = require_size(obj, "out_features", i);
            break;
        case LayerKind::ReLU:
            break;
    }
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key)) throw ParseError(where(i) + ": unexpected key '" + key + "'");
    return l;
}

// Little-endian cursor over the weight file.
class Reader {
public:
    explicit Reader(std::span<const std::byte> b) : bytes_(b) {}

    bool has(std::size_t n) const noexcept { return bytes_.size() - pos_ >= n; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    template <class U>
    U get(const std::string& ctx) {
        need(sizeof(U), ctx);
        U v{};
        std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
        pos_ += sizeof(U);
        if constexpr (std::endian::native == std::endian::big) v = byteswap_(v);
        return v;
    }

    void floats(std::size_t n, std::vector<double>& out, const std::string& ctx) {
        need(n * 4, ctx);
        out.resize(n);
        for (std::size_t k = 0; k < n; ++k) out[k] = std::bit_cast<float>(get<std::uint32_t>(ctx));
    }

private:
    void need(std::size_t n, const std::string& ctx) const {
        if (!has(n)) throw ValidationError("weight file truncated: " + ctx);
    }
    template <class U>
    static U byteswap_(U v) {
        U r{};
        auto* s = reinterpret_cast<unsigned char*>(&v);
        auto* d = reinterpret_cast<unsigned char*>(&r);
        for (std::size_t k = 0; k < sizeof(U); ++k) d[k] = s[sizeof(U) - 1 - k];
        return r;
    }

    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

class Writer {
public:
    template <class U>
    void put(U v) {
        unsigned char buf[sizeof(U)];
        std::memcpy(buf, &v, sizeof(U));
        if constexpr (std::endian::native == std::endian::big)
            for (std::size_t k = 0; k < sizeof(U) / 2; ++k) std::swap(buf[k], buf[sizeof(U) - 1 - k]);
        for (auto c : buf) out_.push_back(std::byte{c});
    }
    void floats(const std::vector<double>& v) {
        for (double d : v) put(std::bit_cast<std::uint32_t>(static_cast<float>(d)));
    }
    std::vector<std::byte> take() { return std::move(out_); }

private:
    std::vector<std::byte> out_;
};

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
    switch (kind) {
        case LayerKind::Conv2d: return "Conv2d";
        case LayerKind::MaxPool2d: return "MaxPool2d";
        case LayerKind::FC: return "FC";
        case LayerKind::ReLU: return "ReLU";
    }
    return "?";
}

LayerSpec LayerSpec::conv(std::size_t in_ch, std::size_t out_ch, bool fused_relu, std::size_t kernel) {
    LayerSpec l;
    l.kind = LayerKind::Conv2d;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.kernel = kernel;
    l.pad = (kernel - 1) / 2;
    l.fused_relu = fused_relu;
    return l;
}

LayerSpec LayerSpec::maxpool() {
    LayerSpec l;
    l.kind = LayerKind::MaxPool2d;
    return l;
}

LayerSpec LayerSpec::fc(std::size_t in_features, std::size_t out_features) {
    LayerSpec l;
    l.kind = LayerKind::FC;
    l.in_features = in_features;
    l.out_features = out_features;
    return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

std::size_t param_count(const LayerSpec& l) noexcept {
    switch (l.kind) {
        case LayerKind::Conv2d: return l.out_ch * l.in_ch * l.kernel * l.kernel + l.out_ch;
        case LayerKind::FC: return l.out_features * l.in_features + l.out_features;
        default: return 0;
    }
}

NetworkSpec::NetworkSpec(Shape input_dims, std::vector<LayerSpec> layers, FxpFormat fmt)
    : input_(input_dims), layers_(std::move(layers)), fmt_(fmt) {
    if (input_.size() == 0) throw ValidationError("network input dims must be non-empty");
    if (!fmt_.valid()) throw ValidationError("invalid fixed-point format");
    shapes_.assign(1, input_);
    for (std::size_t i = 0; i < layers_.size(); ++i)
        shapes_.push_back(propagate(layers_[i], shapes_.back(), i));
}

std::size_t NetworkSpec::total_params() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += param_count(l);
    return n;
}

NetworkSpec NetworkSpec::cifar10(bool conv_relu) {
    return NetworkSpec(Shape{3, 32, 32},
                       {
                           LayerSpec::conv(3, 32, conv_relu),
                           LayerSpec::conv(32, 32, conv_relu),
                           LayerSpec::maxpool(),
                           LayerSpec::conv(32, 64, conv_relu),
                           LayerSpec::conv(64, 64, conv_relu),
                           LayerSpec::maxpool(),
                           LayerSpec::fc(4096, 128),
                           LayerSpec::relu(),
                           LayerSpec::fc(128, 10),
                       });
}

NetworkSpec load_network(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("network config: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("network config: top level must be an object");
    for (const auto& [key, _] : doc.items())
        if (key != "input_dims" && key != "layers" && key != "fxp_format")
            throw ParseError("network config: unexpected key '" + key + "'");

    Shape input{3, 32, 32};
    if (doc.contains("input_dims")) {
        const auto& d = doc.at("input_dims");
        if (!d.is_array() || (d.size() != 3 && d.size() != 1))
            throw ParseError("network config: 'input_dims' must be [c, h, w] or [n]");
        for (const auto& v : d)
            if (!v.is_number_unsigned())
                throw ParseError("network config: 'input_dims' entries must be non-negative integers");
        input = d.size() == 3 ? Shape{d[0].get<std::size_t>(), d[1].get<std::size_t>(), d[2].get<std::size_t>()}
                              : Shape::flat(d[0].get<std::size_t>());
    }
    FxpFormat fmt = kQ8_8;
    if (doc.contains("fxp_format")) {
        if (!doc.at("fxp_format").is_string())
            throw ParseError("network config: 'fxp_format' must be a string");
        fmt = FxpFormat::parse(doc.at("fxp_format").get<std::string>());
    }
    if (!doc.contains("layers") || !doc.at("layers").is_array())
        throw ParseError("network config: missing 'layers' array");
    std::vector<LayerSpec> layers;
    std::size_t i = 0;
    for (const auto& obj : doc.at("layers")) layers.push_back(parse_layer(obj, i++));
    if (layers.empty()) throw ValidationError("network config: layer list is empty");

    NetworkSpec net(input, std::move(layers), fmt);
    if (net.output_dims().size() != NetworkSpec::kNumClasses)
        throw ValidationError("network config: final output " + net.output_dims().to_string() + " must have " +
                              std::to_string(NetworkSpec::kNumClasses) + " elements");
    return net;
}

std::string network_to_json(const NetworkSpec& net) {
    json doc;
    const Shape in = net.input_dims();
    doc["input_dims"] = {in.c, in.h, in.w};
    doc["fxp_format"] = net.fxp_format().to_string();
    doc["layers"] = json::array();
    for (const auto& l : net.layers()) {
        json o;
        o["kind"] = std::string(to_string(l.kind));
        switch (l.kind) {
            case LayerKind::Conv2d:
                o["in_ch"] = l.in_ch;
                o["out_ch"] = l.out_ch;
                o["kernel"] = l.kernel;
                o["stride"] = l.stride;
                o["pad"] = l.pad;
                o["fused_relu"] = l.fused_relu;
                break;
            case LayerKind::MaxPool2d:
                o["window"] = l.window;
                o["stride"] = l.pool_stride;
                break;
            case LayerKind::FC:
                o["in_features"] = l.in_features;
                o["out_features"] = l.out_features;
                break;
            case LayerKind::ReLU:
                break;
        }
        doc["layers"].push_back(o);
    }
    return doc.dump(2);
}

FloatWeights zero_weights(const NetworkSpec& net) {
    std::vector<LayerParams<double>> out;
    for (const auto& l : net.layers()) {
        if (l.kind == LayerKind::Conv2d) {
            ConvDims d{l.out_ch, l.in_ch, l.kernel, l.kernel};
            out.emplace_back(ConvParams<double>{d, std::vector<double>(d.size()), std::vector<double>(l.out_ch)});
        } else if (l.kind == LayerKind::FC) {
            out.emplace_back(FcParams<double>{l.out_features, l.in_features,
                                              std::vector<double>(l.out_features * l.in_features),
                                              std::vector<double>(l.out_features)});
        } else {
            out.emplace_back(std::monostate{});
        }
    }
    return FloatWeights(std::move(out));
}

template <class T>
void check_weights(const NetworkSpec& net, const BasicWeightStore<T>& w) {
    if (w.size() != net.size())
        throw ValidationError("weight store has " + std::to_string(w.size()) + " layers, network has " +
                              std::to_string(net.size()));
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& l = net.layer(i);
        if (l.kind == LayerKind::Conv2d) {
            const auto& c = w.conv(i);
            const ConvDims want{l.out_ch, l.in_ch, l.kernel, l.kernel};
            if (c.dims != want || c.weights.size() != want.size() || c.bias.size() != l.out_ch)
                throw ValidationError(where(i) + ": convolution parameter shape mismatch");
        } else if (l.kind == LayerKind::FC) {
            const auto& f = w.fc(i);
            if (f.out != l.out_features || f.in != l.in_features ||
                f.weights.size() != f.out * f.in || f.bias.size() != f.out)
                throw ValidationError(where(i) + ": FC parameter shape mismatch");
        } else if (!std::holds_alternative<std::monostate>(w.layer(i))) {
            throw ValidationError(where(i) + ": parameterless layer carries parameters");
        }
    }
}

template void check_weights(const NetworkSpec&, const BasicWeightStore<double>&);
template void check_weights(const NetworkSpec&, const BasicWeightStore<Fxp16>&);

FloatWeights read_weight_file(std::span<const std::byte> bytes, const NetworkSpec& net) {
    Reader r(bytes);
    if (!r.has(4) || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ParseError("weight file: bad magic (expected \"EXAI\")");
    r.get<std::uint32_t>("magic");
    const auto version = r.get<std::uint16_t>("header");
    if (version != kVersion)
        throw ParseError("weight file: unsupported version " + std::to_string(version));
    const auto count = r.get<std::uint16_t>("header");

    std::size_t expected = 0;
    for (const auto& l : net.layers()) expected += l.has_params() ? 1 : 0;
    if (count != expected)
        throw ValidationError("weight file: holds " + std::to_string(count) + " parameterized layers, network needs " +
                              std::to_string(expected));

    FloatWeights w = zero_weights(net);
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& l = net.layer(i);
        if (!l.has_params()) continue;
        const std::string ctx = where(i) + " (" + std::string(to_string(l.kind)) + ")";
        const auto kind = r.get<std::uint8_t>(ctx);
        if (l.kind == LayerKind::Conv2d) {
            if (kind != kKindConv) throw ValidationError("weight file: " + ctx + " record is not a convolution");
            ConvDims d;
            d.oc = r.get<std::uint32_t>(ctx);
            d.ic = r.get<std::uint32_t>(ctx);
            d.kh = r.get<std::uint32_t>(ctx);
            d.kw = r.get<std::uint32_t>(ctx);
            auto& c = w.conv(i);
            if (d != c.dims) throw ValidationError("weight file: " + ctx + " dimension mismatch");
            r.floats(d.size(), c.weights, ctx);
            r.floats(d.oc, c.bias, ctx);
        } else {
            if (kind != kKindFc) throw ValidationError("weight file: " + ctx + " record is not FC");
            const std::size_t out = r.get<std::uint32_t>(ctx);
            const std::size_t in = r.get<std::uint32_t>(ctx);
            auto& f = w.fc(i);
            if (out != f.out || in != f.in) throw ValidationError("weight file: " + ctx + " dimension mismatch");
            r.floats(out * in, f.weights, ctx);
            r.floats(out, f.bias, ctx);
        }
    }
    if (r.remaining() != 0)
        throw ValidationError("weight file: " + std::to_string(r.remaining()) + " trailing bytes");
    return w;
}

std::vector<std::byte> write_weight_file(const FloatWeights& w, const NetworkSpec& net) {
    check_weights(net, w);
    Writer out;
    for (char c : kMagic) out.put(static_cast<std::uint8_t>(c));
    std::uint16_t count = 0;
    for (const auto& l : net.layers()) count += l.has_params() ? 1 : 0;
    out.put(kVersion);
    out.put(count);
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& l = net.layer(i);
        if (l.kind == LayerKind::Conv2d) {
            const auto& c = w.conv(i);
            out.put(kKindConv);
            for (auto v : {c.dims.oc, c.dims.ic, c.dims.kh, c.dims.kw}) out.put(static_cast<std::uint32_t>(v));
            out.floats(c.weights);
            out.floats(c.bias);
        } else if (l.kind == LayerKind::FC) {
            const auto& f = w.fc(i);
            out.put(kKindFc);
            out.put(static_cast<std::uint32_t>(f.out));
            out.put(static_cast<std::uint32_t>(f.in));
            out.floats(f.weights);
            out.floats(f.bias);
        }
    }
    return out.take();
}

WeightStore quantize_weights(const FloatWeights& w, FxpFormat fmt, QuantStats* stats) {
    return w.map([&](double v) { return quantize(v, fmt, stats); });
}

FloatWeights dequantize_weights(const WeightStore& w, FxpFormat fmt) {
    return w.map([&](Fxp16 v) { return dequantize(v, fmt); });
}

LoadedWeights load_weights(std::span<const std::byte> bytes, const NetworkSpec& net, FxpFormat fmt) {
    LoadedWeights out;
    out.weights = quantize_weights(read_weight_file(bytes, net), fmt, &out.stats);
    return out;
}

}  // namespace exai
