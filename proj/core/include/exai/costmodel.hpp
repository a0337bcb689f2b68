// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "exai/method.hpp"
#include "exai/model.hpp"
#include "exai/tiling.hpp"

namespace exai {

enum class Phase { FP, BP };

/// Analytical estimates for one network / method / tile configuration.
/// Field names double as JSON keys.
struct CostReport {
    std::uint64_t mask_bits = 0;
    std::uint64_t autodiff_cache_bits = 0;
    std::uint64_t dram_bytes_fp = 0;
    std::uint64_t dram_bytes_bp = 0;
    std::uint64_t mac_count_fp = 0;
    std::uint64_t mac_count_bp = 0;
    std::uint64_t est_cycles_fp = 0;
    std::uint64_t est_cycles_bp = 0;
    std::uint64_t dsp_count = 0;

    friend bool operator==(const CostReport&, const CostReport&) = default;
};

struct CostParams {
    std::size_t bus_bytes_per_cycle = 8;
    std::size_t element_bytes = 2;        // 16-bit words in DRAM
    std::size_t autodiff_precision_bits = 32;
};

/// On-chip mask storage: 2 bits per pooled element, plus 1 bit per ReLU
/// input element unless the method is DeconvNet.
std::uint64_t mask_overhead_bits(const NetworkSpec& net, AttributionMethod method);

/// Activation cache of a framework autodiff: every layer output at
/// `precision_bits`.
std::uint64_t autodiff_cache_bits(const NetworkSpec& net, std::size_t precision_bits);

std::uint64_t mac_count(const NetworkSpec& net, Phase phase);

/// Words moved between DRAM and the on-chip buffers, in bytes.
std::uint64_t dram_bytes(const NetworkSpec& net, const TileConfig& tiles, Phase phase,
                         const CostParams& params = {});

/// Compute cycles (MACs over parallel lanes, per layer) plus transfer cycles
/// (DRAM bytes over the bus width).
std::uint64_t latency_cycles(const NetworkSpec& net, const TileConfig& tiles, Phase phase,
                             const CostParams& params = {});

std::uint64_t dsp_count(const TileConfig& tiles) noexcept;

CostReport estimate_cost(const NetworkSpec& net, AttributionMethod method, const TileConfig& tiles,
                         const CostParams& params = {});

std::string cost_report_json(const CostReport& r, int indent = 2);

}  // namespace exai
