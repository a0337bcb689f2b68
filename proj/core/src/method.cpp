// SPDX-License-Identifier: Apache-2.0
#include "exai/method.hpp"

#include "exai/error.hpp"

namespace exai {

AttributionMethod parse_method(std::string_view text) {
    if (text == "saliency") return AttributionMethod::SaliencyMap;
    if (text == "deconvnet") return AttributionMethod::DeconvNet;
    if (text == "guided") return AttributionMethod::GuidedBackprop;
    throw ParseError("unknown method '" + std::string(text) + "' (expected saliency, deconvnet or guided)");
}

std::string_view to_string(AttributionMethod m) noexcept {
    switch (m) {
        case AttributionMethod::SaliencyMap: return "saliency";
        case AttributionMethod::DeconvNet: return "deconvnet";
        case AttributionMethod::GuidedBackprop: return "guided";
    }
    return "?";
}

}  // namespace exai
