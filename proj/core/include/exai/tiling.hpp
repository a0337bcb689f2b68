// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace exai {

/// Design-time buffer and unroll configuration of the compute blocks.
///
/// Convolution tiles cover `t_oh x t_ow` output pixels of `t_oc` output
/// channels and stream `t_ic` input channels at a time. `n_oh x n_ow` is the
/// number of parallel MAC lanes. The VMM block keeps `t_out` outputs
/// stationary while streaming `t_in` inputs; `vmm_unroll` MACs per cycle.
/// Tiles larger than a layer are clipped to it.
struct TileConfig {
    std::size_t t_oh = 16;
    std::size_t t_ow = 16;
    std::size_t t_ic = 16;
    std::size_t t_oc = 16;
    std::size_t n_oh = 4;
    std::size_t n_ow = 4;
    std::size_t vmm_unroll = 16;
    std::size_t t_in = 512;
    std::size_t t_out = 16;

    /// Throws ValidationError on zero sizes or lanes wider than their tile.
    void validate() const;

    /// One tile per layer dimension, single lane.
    static TileConfig untiled();

    /// "OHxOWxVMM", e.g. "4x4x16": sets n_oh, n_ow and vmm_unroll, widening
    /// the spatial tiles when the lanes would not fit, and t_out to the VMM width.
    static TileConfig from_unroll_string(std::string_view text);

    std::string unroll_string() const;

    friend bool operator==(const TileConfig&, const TileConfig&) = default;
};

}  // namespace exai
