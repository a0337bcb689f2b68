// SPDX-License-Identifier: Apache-2.0
#include "exai/attribution.hpp"

#include <algorithm>
#include <cmath>

namespace exai {

AttributionResult attribute(const FixedDatapath& dp, const NetworkSpec& net, const WeightStore& w, const Tensor& image,
                            AttributionMethod method, const TileConfig& tiles, const AttributeOptions& opts) {
    auto trace = run_attribution(dp, net, w, image, method, tiles, opts.class_override, opts.threads);

    AttributionResult r;
    r.class_index = trace.class_index;
    r.logits = trace.forward.logits;
    r.relevance = RelevanceMap{trace.relevance, dp.fmt, method, trace.class_index};
    r.cost = estimate_cost(net, method, tiles);
    r.intermediate_sparsity = intermediate_sparsity(trace);
    r.grad_saturations.resize(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) r.grad_saturations[i] = {i, net.layer(i).kind, 0};
    for (const auto& s : trace.steps) r.grad_saturations[s.layer].saturations += s.stats.total();
    return r;
}

ChannelReduction parse_reduction(std::string_view text) {
    if (text == "max_abs") return ChannelReduction::MaxAbs;
    if (text == "sum_abs") return ChannelReduction::SumAbs;
    if (text == "signed_sum") return ChannelReduction::SignedSum;
    throw ParseError("unknown channel reduction '" + std::string(text) + "'");
}

Heatmap to_heatmap(const FloatTensor& rel, ChannelReduction reduction) {
    const Shape s = rel.shape();
    Heatmap hm{s.h, s.w, std::vector<std::uint8_t>(s.h * s.w, 128)};
    if (rel.empty()) return hm;
    std::vector<double> plane(s.h * s.w, 0.0);
    for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x) {
            double acc = 0.0;
            for (std::size_t c = 0; c < s.c; ++c) {
                const double v = rel.at(c, y, x);
                switch (reduction) {
                    case ChannelReduction::MaxAbs: acc = std::max(acc, std::abs(v)); break;
                    case ChannelReduction::SumAbs: acc += std::abs(v); break;
                    case ChannelReduction::SignedSum: acc += v; break;
                }
            }
            plane[y * s.w + x] = acc;
        }
    const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
    const double range = *hi - *lo;
    if (range <= 0.0) return hm;
    for (std::size_t p = 0; p < plane.size(); ++p)
        hm.pixels[p] = static_cast<std::uint8_t>(std::lround((plane[p] - *lo) / range * 255.0));
    return hm;
}

}  // namespace exai
