// SPDX-License-Identifier: Apache-2.0
#include "exai/costmodel.hpp"

#include <algorithm>

#include <json.hpp>

namespace exai {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// Input elements fetched for every (output-channel tile, spatial tile) pair;
// each spatial tile is read with its halo, clipped to the feature map.
std::uint64_t conv_input_elems(std::size_t ch, std::size_t h, std::size_t w, std::size_t k, std::size_t th,
                               std::size_t tw) {
    const std::size_t pad = (k - 1) / 2;
    std::uint64_t n = 0;
    for (std::size_t y0 = 0; y0 < h; y0 += th) {
        const std::size_t y1 = std::min(h, y0 + th);
        const std::size_t rows = std::min(h, y1 + pad) - (y0 >= pad ? y0 - pad : 0);
        for (std::size_t x0 = 0; x0 < w; x0 += tw) {
            const std::size_t x1 = std::min(w, x0 + tw);
            const std::size_t cols = std::min(w, x1 + pad) - (x0 >= pad ? x0 - pad : 0);
            n += std::uint64_t(ch) * rows * cols;
        }
    }
    return n;
}

struct ConvGeometry {
    std::size_t in_ch, out_ch, h, w, k;
};

std::uint64_t conv_bytes(const ConvGeometry& g, const TileConfig& t, bool with_bias, std::uint64_t out_elems,
                         std::size_t eb) {
    const std::size_t th = std::min(t.t_oh, g.h), tw = std::min(t.t_ow, g.w);
    const std::uint64_t oc_tiles = ceil_div(g.out_ch, std::min(t.t_oc, g.out_ch));
    const std::uint64_t sp_tiles = ceil_div(g.h, th) * ceil_div(g.w, tw);
    const std::uint64_t input = oc_tiles * conv_input_elems(g.in_ch, g.h, g.w, g.k, th, tw);
    const std::uint64_t weights = sp_tiles * std::uint64_t(g.out_ch) * g.in_ch * g.k * g.k;
    const std::uint64_t bias = with_bias ? g.out_ch * sp_tiles : 0;
    return (input + weights + bias + out_elems) * eb;
}

std::uint64_t fc_bytes(std::size_t in, std::size_t out, const TileConfig& t, bool with_bias, std::size_t eb) {
    const std::uint64_t out_tiles = ceil_div(out, std::min(t.t_out, out));
    return (out_tiles * in + std::uint64_t(out) * in + (with_bias ? out : 0) + out) * eb;
}

std::uint64_t layer_macs(const NetworkSpec& net, std::size_t i, Phase phase) {
    const auto& l = net.layer(i);
    const Shape in = net.input_of(i), out = net.output_of(i);
    const std::uint64_t k2 = std::uint64_t(l.kernel) * l.kernel;
    if (l.kind == LayerKind::Conv2d)
        return phase == Phase::FP ? std::uint64_t(out.c) * out.h * out.w * in.c * k2
                                  : std::uint64_t(in.c) * in.h * in.w * out.c * k2;
    if (l.kind == LayerKind::FC) return std::uint64_t(l.out_features) * l.in_features;
    return 0;
}

}  // namespace

std::uint64_t mask_overhead_bits(const NetworkSpec& net, AttributionMethod method) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& l = net.layer(i);
        if (l.kind == LayerKind::MaxPool2d) bits += 2 * net.output_of(i).size();
        if (l.is_relu_site() && needs_relu_mask(method)) {
            // a fused conv ReLU sees the conv output; a ReLU layer its input
            bits += l.kind == LayerKind::ReLU ? net.input_of(i).size() : net.output_of(i).size();
        }
    }
    return bits;
}

std::uint64_t autodiff_cache_bits(const NetworkSpec& net, std::size_t precision_bits) {
    std::uint64_t elems = 0;
    for (std::size_t i = 0; i < net.size(); ++i) elems += net.output_of(i).size();
    return elems * precision_bits;
}

std::uint64_t mac_count(const NetworkSpec& net, Phase phase) {
    std::uint64_t macs = 0;
    for (std::size_t i = 0; i < net.size(); ++i) macs += layer_macs(net, i, phase);
    return macs;
}

std::uint64_t dram_bytes(const NetworkSpec& net, const TileConfig& tiles, Phase phase, const CostParams& params) {
    tiles.validate();
    const std::size_t eb = params.element_bytes;
    std::uint64_t bytes = 0;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& l = net.layer(i);
        const Shape in = net.input_of(i), out = net.output_of(i);
        switch (l.kind) {
            case LayerKind::Conv2d: {
                const bool pooled_next = i + 1 < net.size() && net.layer(i + 1).kind == LayerKind::MaxPool2d;
                if (phase == Phase::FP) {
                    const std::uint64_t stored = pooled_next ? net.output_of(i + 1).size() : out.size();
                    bytes += conv_bytes({in.c, out.c, in.h, in.w, l.kernel}, tiles, true, stored, eb);
                } else {
                    // gradient w.r.t. this conv's output is read (after unpooling), gradient w.r.t. input stored
                    bytes += conv_bytes({out.c, in.c, in.h, in.w, l.kernel}, tiles, false, in.size(), eb);
                }
                break;
            }
            case LayerKind::MaxPool2d: {
                const bool fused = i > 0 && net.layer(i - 1).kind == LayerKind::Conv2d;
                if (!fused) bytes += (in.size() + out.size()) * eb;
                break;
            }
            case LayerKind::FC:
                bytes += phase == Phase::FP ? fc_bytes(l.in_features, l.out_features, tiles, true, eb)
                                            : fc_bytes(l.out_features, l.in_features, tiles, false, eb);
                break;
            case LayerKind::ReLU:
                break;  // applied in place on the producing block's output buffer
        }
    }
    return bytes;
}

std::uint64_t latency_cycles(const NetworkSpec& net, const TileConfig& tiles, Phase phase, const CostParams& params) {
    tiles.validate();
    std::uint64_t cycles = 0;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto kind = net.layer(i).kind;
        if (kind == LayerKind::Conv2d)
            cycles += ceil_div(layer_macs(net, i, phase), tiles.n_oh * tiles.n_ow);
        else if (kind == LayerKind::FC)
            cycles += ceil_div(layer_macs(net, i, phase), tiles.vmm_unroll);
    }
    return cycles + ceil_div(dram_bytes(net, tiles, phase, params), params.bus_bytes_per_cycle);
}

std::uint64_t dsp_count(const TileConfig& tiles) noexcept { return tiles.n_oh * tiles.n_ow + tiles.vmm_unroll; }

CostReport estimate_cost(const NetworkSpec& net, AttributionMethod method, const TileConfig& tiles,
                         const CostParams& params) {
    CostReport r;
    r.mask_bits = mask_overhead_bits(net, method);
    r.autodiff_cache_bits = autodiff_cache_bits(net, params.autodiff_precision_bits);
    r.dram_bytes_fp = dram_bytes(net, tiles, Phase::FP, params);
    r.dram_bytes_bp = dram_bytes(net, tiles, Phase::BP, params);
    r.mac_count_fp = mac_count(net, Phase::FP);
    r.mac_count_bp = mac_count(net, Phase::BP);
    r.est_cycles_fp = latency_cycles(net, tiles, Phase::FP, params);
    r.est_cycles_bp = latency_cycles(net, tiles, Phase::BP, params);
    r.dsp_count = dsp_count(tiles);
    return r;
}

std::string cost_report_json(const CostReport& r, int indent) {
    nlohmann::ordered_json j;
    j["mask_bits"] = r.mask_bits;
    j["autodiff_cache_bits"] = r.autodiff_cache_bits;
    j["dram_bytes_fp"] = r.dram_bytes_fp;
    j["dram_bytes_bp"] = r.dram_bytes_bp;
    j["mac_count_fp"] = r.mac_count_fp;
    j["mac_count_bp"] = r.mac_count_bp;
    j["est_cycles_fp"] = r.est_cycles_fp;
    j["est_cycles_bp"] = r.est_cycles_bp;
    j["dsp_count"] = r.dsp_count;
    return j.dump(indent);
}

}  // namespace exai
