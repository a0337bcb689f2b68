// SPDX-License-Identifier: Apache-2.0
#include "exai/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "exai/attribution.hpp"
#include "test_support.hpp"

namespace exai {
namespace {

using testing::Rng;

double max_rel_err(const FloatTensor& a, const FloatTensor& b) {
    double scale = 0, err = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max(scale, std::abs(b[i]));
        err = std::max(err, std::abs(a[i] - b[i]));
    }
    return scale > 0 ? err / scale : err;
}

TEST(ForwardRef, IdentityConvPassesThrough) {
    const NetworkSpec net(Shape{1, 3, 4}, {LayerSpec::conv(1, 1, false, 1), LayerSpec::fc(12, 10)});
    auto w = zero_weights(net);
    w.conv(0).weights[0] = 1.0;
    Rng rng(1);
    const auto x = testing::random_float_tensor(net.input_dims(), rng);
    EXPECT_EQ(oracle::forward_ref(net, w, x).activations[0], x);
}

TEST(ForwardRef, Cifar10ActivationCount) {
    const auto net = NetworkSpec::cifar10();
    const auto r = oracle::forward_ref(net, zero_weights(net), FloatTensor(net.input_dims()));
    std::size_t total = 0;
    for (const auto& a : r.activations) total += a.size();
    EXPECT_EQ(total, 110858u);
    EXPECT_EQ(r.logits.size(), 10u);
}

// The fixed-point engine stays within the per-layer rounding bound of the
// oracle on a small net (bound propagated loosely here: element-wise
// 2^-f * (R + 1) per layer given identical inputs).
TEST(ForwardRef, AgreesWithFixedEngineWithinBound) {
    const NetworkSpec net(Shape{2, 8, 8}, {LayerSpec::conv(2, 3), LayerSpec::maxpool(), LayerSpec::fc(48, 10)});
    const FixedDatapath dp{kQ8_8};
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const auto w = quantize_weights(testing::random_weights(net, rng, -0.25, 0.25), kQ8_8);
        const auto fw = dequantize_weights(w, kQ8_8);
        const auto x = quantize_tensor(testing::random_float_tensor(net.input_dims(), rng), kQ8_8);
        const auto fx = oracle::forward_ref(net, fw, dequantize_tensor(x, kQ8_8));
        const auto fp = forward_pass(dp, net, w, x, TileConfig{}, AttributionMethod::SaliencyMap, 1, true);
        // first conv sees identical inputs: error is one rounding
        const auto a0 = dequantize_tensor(fp.activations[0], kQ8_8);
        for (std::size_t i = 0; i < a0.size(); ++i) EXPECT_LE(std::abs(a0[i] - fx.activations[0][i]), kQ8_8.epsilon() / 2);
        // FC result: its own rounding plus propagated first-layer error
        double wsum = 0;
        for (const auto& v : fw.fc(2).weights) wsum = std::max(wsum, std::abs(v));
        const double bound = kQ8_8.epsilon() / 2 * (1 + 48 * wsum);
        for (std::size_t o = 0; o < 10; ++o)
            EXPECT_LE(std::abs(dequantize(fp.logits[o], kQ8_8) - fx.logits[o]), bound);
    }
}

TEST(FiniteDiff, LinearAndConstant) {
    const FloatTensor x(Shape::flat(3), std::vector<double>{0.3, -1.0, 2.0});
    const auto lin = oracle::finite_diff_grad([](const FloatTensor& t) { return 3.0 * t[0] - 0.5 * t[2]; }, x, 1e-3);
    EXPECT_NEAR(lin[0], 3.0, 1e-12);
    EXPECT_NEAR(lin[1], 0.0, 1e-12);
    EXPECT_NEAR(lin[2], -0.5, 1e-12);
    const auto c = oracle::finite_diff_grad([](const FloatTensor&) { return 4.0; }, x, 1e-3);
    for (double v : c.values()) EXPECT_EQ(v, 0.0);
}

TEST(BackwardRef, LinearNetIsJacobianRow) {
    const NetworkSpec net(Shape{2, 4, 4}, {LayerSpec::conv(2, 2), LayerSpec::fc(32, 10)});
    Rng rng(3);
    const auto w = testing::random_weights(net, rng, -1, 1);
    const auto x = testing::random_float_tensor(net.input_dims(), rng);
    const auto y0 = oracle::forward_ref(net, w, x).logits;
    for (std::size_t c : {0u, 5u, 9u}) {
        const auto r = oracle::backward_ref(net, w, x, AttributionMethod::GuidedBackprop, c);
        for (std::size_t i = 0; i < x.size(); ++i) {
            auto xp = x;
            xp[i] += 1.0;  // exact for a linear map
            EXPECT_NEAR(oracle::forward_ref(net, w, xp).logits[c] - y0[c], r[i], 1e-9);
        }
    }
}

TEST(BackwardRef, SaliencyEqualsFiniteDifferences) {
    const NetworkSpec net(Shape{1, 8, 8}, {LayerSpec::conv(1, 2, true), LayerSpec::maxpool(),
                                           LayerSpec::conv(2, 2, true), LayerSpec::fc(32, 10)});
    Rng rng(4);
    int checked = 0;
    while (checked < 10) {
        const auto w = testing::random_weights(net, rng, -1, 1);
        const auto x = testing::random_float_tensor(net.input_dims(), rng);
        if (oracle::kink_margin(net, w, x) < 1e-2) continue;
        const auto r = oracle::backward_ref(net, w, x, AttributionMethod::SaliencyMap, 1);
        EXPECT_LE(max_rel_err(r, oracle::finite_diff_grad(net, w, x, 1, 1e-3)), 1e-6);
        ++checked;
    }
}

TEST(BackwardRef, AgreesWithFloatEngineChain) {
    const NetworkSpec net(Shape{2, 8, 8}, {LayerSpec::conv(2, 3, true), LayerSpec::maxpool(), LayerSpec::fc(48, 8),
                                           LayerSpec::relu(), LayerSpec::fc(8, 10)});
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto w = testing::random_weights(net, rng, -1, 1);
        const auto x = testing::random_float_tensor(net.input_dims(), rng);
        for (auto m : {AttributionMethod::SaliencyMap, AttributionMethod::DeconvNet, AttributionMethod::GuidedBackprop}) {
            const auto engine = run_attribution(FloatDatapath{}, net, w, x, m, TileConfig{}, 3);
            const auto ref = oracle::backward_ref(net, w, x, m, 3);
            EXPECT_LE(max_rel_err(engine.relevance, ref), 1e-12);
        }
    }
}

TEST(BackwardRef, GuidedSupportWithinSaliency) {
    const NetworkSpec net(Shape{2, 8, 8}, {LayerSpec::conv(2, 3, true), LayerSpec::maxpool(), LayerSpec::fc(48, 8),
                                           LayerSpec::relu(), LayerSpec::fc(8, 10)});
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const auto w = testing::random_weights(net, rng, -1, 1);
        const auto x = testing::random_float_tensor(net.input_dims(), rng);
        const auto s = oracle::backward_trace(net, w, x, AttributionMethod::SaliencyMap, 0);
        const auto g = oracle::backward_trace(net, w, x, AttributionMethod::GuidedBackprop, 0);
        // the first site (last ReLU) sees the same incoming gradient
        ASSERT_EQ(s.relu_site_grads.size(), 2u);
        for (std::size_t i = 0; i < g.relu_site_grads[0].size(); ++i)
            if (g.relu_site_grads[0][i] != 0.0) EXPECT_NE(s.relu_site_grads[0][i], 0.0);
        for (const auto& site : g.relu_site_grads)
            for (double v : site.values()) EXPECT_GE(v, 0.0);
    }
}

TEST(KinkMargin, DetectsTies) {
    const NetworkSpec net(Shape{1, 2, 2}, {LayerSpec::maxpool(), LayerSpec::fc(1, 10)});
    const auto w = zero_weights(net);
    EXPECT_EQ(oracle::kink_margin(net, w, FloatTensor(Shape{1, 2, 2}, std::vector<double>{1, 1, 0, 0})), 0.0);
    EXPECT_NEAR(oracle::kink_margin(net, w, FloatTensor(Shape{1, 2, 2}, std::vector<double>{1, 0.5, 0, 0})), 0.5,
                1e-12);
}

}  // namespace
}  // namespace exai
