// SPDX-License-Identifier: Apache-2.0
#pragma once

// Tiled compute blocks shared by the forward and backward phases. Both
// blocks are output stationary: an accumulator per output element lives for
// the whole tile while input-channel (or input-vector) tiles stream past in
// ascending order, and the element is requantized exactly once when the tile
// is stored. Output tiles are independent and may run on different threads.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "exai/datapath.hpp"
#include "exai/error.hpp"
#include "exai/parallel.hpp"
#include "exai/tensor.hpp"
#include "exai/tiling.hpp"

namespace exai::kernels {

/// Half-open box of output elements covered by one tile.
struct TileBox {
    std::size_t c0, c1, y0, y1, x0, x1;
};

struct NoEpilogue {
    template <class T>
    void operator()(T&, const TileBox&) const noexcept {}
};

inline std::size_t tile_count(std::size_t extent, std::size_t tile) noexcept {
    return (extent + tile - 1) / tile;
}

/// Stride-1 "same" convolution with an odd square kernel of side `k`.
///
/// `weight(o, i, y, x)` supplies the tap for output channel o / input
/// channel i; routing it through an accessor lets BP reuse this block with
/// transposed and flipped loads. `bias` is empty or holds `out_ch` values.
/// `epilogue(out, box)` runs on the tile's thread after the tile is stored;
/// it may only touch elements inside `box`.
template <class DP, class WeightFn, class Epilogue = NoEpilogue>
BasicTensor<typename DP::value_type> conv_block(const DP& dp, const BasicTensor<typename DP::value_type>& in,
                                                std::size_t out_ch, std::size_t k, WeightFn&& weight,
                                                std::span<const typename DP::value_type> bias,
                                                const TileConfig& tiles, unsigned threads,
                                                KernelStats* stats, Epilogue&& epilogue = {}) {
    using V = typename DP::value_type;
    using A = typename DP::acc_type;
    if (k % 2 == 0) throw ValidationError("convolution kernel side must be odd");
    if (!bias.empty() && bias.size() != out_ch) throw ValidationError("convolution bias length mismatch");
    tiles.validate();

    const Shape is = in.shape();
    const std::size_t pad = (k - 1) / 2;
    const std::size_t H = is.h, W = is.w, IC = is.c;
    BasicTensor<V> out(Shape{out_ch, H, W});

    const std::size_t th = std::min(tiles.t_oh, H), tw = std::min(tiles.t_ow, W);
    const std::size_t tic = std::min(tiles.t_ic, std::max<std::size_t>(IC, 1));
    const std::size_t toc = std::min(tiles.t_oc, out_ch);
    const std::size_t n_oc = tile_count(out_ch, toc), n_y = tile_count(H, th), n_x = tile_count(W, tw);
    const std::size_t n_tiles = n_oc * n_y * n_x;
    std::vector<KernelStats> tile_stats(n_tiles);

    parallel_for(n_tiles, threads, [&](std::size_t t) {
        const std::size_t ot = t / (n_y * n_x), yt = (t / n_x) % n_y, xt = t % n_x;
        const TileBox box{ot * toc, std::min(out_ch, (ot + 1) * toc), yt * th, std::min(H, (yt + 1) * th),
                          xt * tw, std::min(W, (xt + 1) * tw)};
        const std::size_t bc = box.c1 - box.c0, bh = box.y1 - box.y0, bw = box.x1 - box.x0;
        const std::size_t hh = bh + 2 * pad, hw = bw + 2 * pad;  // input tile with halo

        std::vector<A> acc(bc * bh * bw, dp.zero_acc());
        if (!bias.empty())
            for (std::size_t o = 0; o < bc; ++o)
                for (std::size_t p = 0; p < bh * bw; ++p) dp.add_bias(acc[o * bh * bw + p], bias[box.c0 + o]);

        std::vector<V> in_buf(tic * hh * hw);
        std::vector<V> w_buf(bc * tic * k * k);
        for (std::size_t i0 = 0; i0 < IC; i0 += tic) {
            const std::size_t ni = std::min(tic, IC - i0);
            // load input tile (zero outside the feature map)
            for (std::size_t i = 0; i < ni; ++i)
                for (std::size_t y = 0; y < hh; ++y)
                    for (std::size_t x = 0; x < hw; ++x) {
                        const std::ptrdiff_t sy = std::ptrdiff_t(box.y0 + y) - std::ptrdiff_t(pad);
                        const std::ptrdiff_t sx = std::ptrdiff_t(box.x0 + x) - std::ptrdiff_t(pad);
                        const bool inside = sy >= 0 && sx >= 0 && sy < std::ptrdiff_t(H) && sx < std::ptrdiff_t(W);
                        in_buf[(i * hh + y) * hw + x] = inside ? in.at(i0 + i, std::size_t(sy), std::size_t(sx)) : V{};
                    }
            // load weight tile
            for (std::size_t o = 0; o < bc; ++o)
                for (std::size_t i = 0; i < ni; ++i)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx)
                            w_buf[((o * tic + i) * k + ky) * k + kx] = weight(box.c0 + o, i0 + i, ky, kx);
            // MAC: per output element the order is input channel, kernel row, kernel column
            for (std::size_t o = 0; o < bc; ++o)
                for (std::size_t i = 0; i < ni; ++i)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const V wv = w_buf[((o * tic + i) * k + ky) * k + kx];
                            for (std::size_t ly = 0; ly < bh; ly += tiles.n_oh)
                                for (std::size_t lx = 0; lx < bw; lx += tiles.n_ow)
                                    // one pass of the n_oh x n_ow lane array
                                    for (std::size_t y = ly; y < std::min(bh, ly + tiles.n_oh); ++y)
                                        for (std::size_t x = lx; x < std::min(bw, lx + tiles.n_ow); ++x)
                                            dp.mac(acc[(o * bh + y) * bw + x], in_buf[(i * hh + y + ky) * hw + x + kx], wv);
                        }
        }
        KernelStats& st = tile_stats[t];
        for (std::size_t o = 0; o < bc; ++o)
            for (std::size_t y = 0; y < bh; ++y)
                for (std::size_t x = 0; x < bw; ++x)
                    out.at(box.c0 + o, box.y0 + y, box.x0 + x) = dp.store(acc[(o * bh + y) * bw + x], st);
        epilogue(out, box);
    });

    if (stats)
        for (const auto& s : tile_stats) *stats += s;
    return out;
}

/// out[o] = sum_i weight(o, i) * x[i] (+ bias[o]), i ascending.
template <class DP, class WeightFn>
BasicTensor<typename DP::value_type> vmm_block(const DP& dp, std::span<const typename DP::value_type> x,
                                               std::size_t out_len, WeightFn&& weight,
                                               std::span<const typename DP::value_type> bias,
                                               const TileConfig& tiles, unsigned threads, KernelStats* stats) {
    using V = typename DP::value_type;
    using A = typename DP::acc_type;
    if (!bias.empty() && bias.size() != out_len) throw ValidationError("VMM bias length mismatch");
    tiles.validate();
    const std::size_t in_len = x.size();
    const std::size_t t_out = std::min(tiles.t_out, std::max<std::size_t>(out_len, 1));
    const std::size_t t_in = std::min(tiles.t_in, std::max<std::size_t>(in_len, 1));
    const std::size_t n_tiles = tile_count(out_len, t_out);

    BasicTensor<V> out(Shape::flat(out_len));
    std::vector<KernelStats> tile_stats(n_tiles);
    parallel_for(n_tiles, threads, [&](std::size_t t) {
        const std::size_t o0 = t * t_out, o1 = std::min(out_len, o0 + t_out);
        std::vector<A> acc(o1 - o0, dp.zero_acc());
        if (!bias.empty())
            for (std::size_t o = o0; o < o1; ++o) dp.add_bias(acc[o - o0], bias[o]);
        std::vector<V> x_buf(t_in);
        for (std::size_t i0 = 0; i0 < in_len; i0 += t_in) {
            const std::size_t i1 = std::min(in_len, i0 + t_in);
            std::copy(x.begin() + std::ptrdiff_t(i0), x.begin() + std::ptrdiff_t(i1), x_buf.begin());
            for (std::size_t o = o0; o < o1; ++o)
                for (std::size_t i = i0; i < i1; ++i) dp.mac(acc[o - o0], weight(o, i), x_buf[i - i0]);
        }
        for (std::size_t o = o0; o < o1; ++o) out[o] = dp.store(acc[o - o0], tile_stats[t]);
    });
    if (stats)
        for (const auto& s : tile_stats) *stats += s;
    return out;
}

}  // namespace exai::kernels
