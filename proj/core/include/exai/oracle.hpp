// SPDX-License-Identifier: Apache-2.0
#pragma once

// Double-precision reference evaluation written as plain nested loops. It
// shares no kernel code with the engine: convolution gradients are scattered
// from each output rather than gathered through flipped weights, and pooling
// routes by re-scanning the cached forward activations.

#include <cstddef>
#include <functional>
#include <vector>

#include "exai/method.hpp"
#include "exai/model.hpp"
#include "exai/tensor.hpp"

namespace exai::oracle {

struct ForwardRef {
    FloatTensor logits;
    std::vector<FloatTensor> activations;  // output of every layer (fused conv ReLU applied)
    std::vector<FloatTensor> pre_relu;     // conv output before its fused ReLU; empty otherwise
};

ForwardRef forward_ref(const NetworkSpec& net, const FloatWeights& w, const FloatTensor& image);

struct BackwardRef {
    FloatTensor relevance;
    /// Gradient right after each ReLU rule, in BP order.
    std::vector<FloatTensor> relu_site_grads;
};

BackwardRef backward_trace(const NetworkSpec& net, const FloatWeights& w, const FloatTensor& image,
                           AttributionMethod method, std::size_t c);

inline FloatTensor backward_ref(const NetworkSpec& net, const FloatWeights& w, const FloatTensor& image,
                                AttributionMethod method, std::size_t c) {
    return backward_trace(net, w, image, method, c).relevance;
}

/// Central differences of an arbitrary scalar function.
FloatTensor finite_diff_grad(const std::function<double(const FloatTensor&)>& f, const FloatTensor& x, double eps);

/// Central differences of logit `c` with respect to every input element.
FloatTensor finite_diff_grad(const NetworkSpec& net, const FloatWeights& w, const FloatTensor& image, std::size_t c,
                             double eps);

/// Distance of the forward pass from a non-differentiable point: the smallest
/// |pre-ReLU activation| and the smallest gap between a pooling window's
/// maximum and its runner-up.
double kink_margin(const NetworkSpec& net, const FloatWeights& w, const FloatTensor& image);

}  // namespace exai::oracle
