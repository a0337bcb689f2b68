// SPDX-License-Identifier: Apache-2.0
#include "exai/tiling.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <vector>

#include "exai/error.hpp"

namespace exai {

void TileConfig::validate() const {
    for (std::size_t v : {t_oh, t_ow, t_ic, t_oc, n_oh, n_ow, vmm_unroll, t_in, t_out})
        if (v == 0) throw ValidationError("tile and unroll sizes must be >= 1");
    if (n_oh > t_oh || n_ow > t_ow)
        throw ValidationError("unroll factors (" + std::to_string(n_oh) + "x" + std::to_string(n_ow) +
                              ") exceed the output tile (" + std::to_string(t_oh) + "x" + std::to_string(t_ow) + ")");
}

TileConfig TileConfig::untiled() {
    constexpr std::size_t kFull = std::numeric_limits<std::size_t>::max() / 4;
    TileConfig t;
    t.t_oh = t.t_ow = t.t_ic = t.t_oc = kFull;
    t.t_in = t.t_out = kFull;
    t.n_oh = t.n_ow = 1;
    t.vmm_unroll = 1;
    return t;
}

TileConfig TileConfig::from_unroll_string(std::string_view text) {
    const auto fail = [&] {
        return ParseError("invalid tile spec '" + std::string(text) + "' (expected OHxOWxVMM, e.g. 4x4x16)");
    };
    std::vector<std::size_t> parts;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    while (p < end) {
        std::size_t v = 0;
        auto r = std::from_chars(p, end, v);
        if (r.ec != std::errc{}) throw fail();
        parts.push_back(v);
        p = r.ptr;
        if (p < end) {
            if (*p != 'x' && *p != 'X') throw fail();
            ++p;
            if (p == end) throw fail();
        }
    }
    if (parts.size() != 3) throw fail();
    TileConfig t;
    t.n_oh = parts[0];
    t.n_ow = parts[1];
    t.vmm_unroll = parts[2];
    t.t_oh = std::max(t.t_oh, t.n_oh);
    t.t_ow = std::max(t.t_ow, t.n_ow);
    t.t_out = std::max<std::size_t>(1, t.vmm_unroll);
    t.validate();
    return t;
}

std::string TileConfig::unroll_string() const {
    return std::to_string(n_oh) + "x" + std::to_string(n_ow) + "x" + std::to_string(vmm_unroll);
}

}  // namespace exai
