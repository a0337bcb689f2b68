// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace exai {

/// Gradient-based attribution variants; they differ only at ReLU sites.
enum class AttributionMethod { SaliencyMap, DeconvNet, GuidedBackprop };

/// Whether the forward pass has to cache 1-bit ReLU masks for this method.
constexpr bool needs_relu_mask(AttributionMethod m) noexcept { return m != AttributionMethod::DeconvNet; }

/// Accepts "saliency", "deconvnet", "guided" (CLI spelling).
AttributionMethod parse_method(std::string_view text);
std::string_view to_string(AttributionMethod m) noexcept;

}  // namespace exai
