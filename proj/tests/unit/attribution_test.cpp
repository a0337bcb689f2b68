// SPDX-License-Identifier: Apache-2.0
#include "exai/attribution.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "exai/error.hpp"
#include "exai/oracle.hpp"
#include "test_support.hpp"

namespace exai {
namespace {

using testing::Rng;

const FixedDatapath kDp{kQ8_8};

constexpr AttributionMethod kMethods[] = {AttributionMethod::SaliencyMap, AttributionMethod::DeconvNet,
                                          AttributionMethod::GuidedBackprop};

NetworkSpec relu_net() {
    return NetworkSpec(Shape{2, 8, 8}, {LayerSpec::conv(2, 4, true), LayerSpec::maxpool(), LayerSpec::conv(4, 4, true),
                                        LayerSpec::fc(64, 12), LayerSpec::relu(), LayerSpec::fc(12, 10)});
}

TEST(Method, ParseAndMaskNeeds) {
    EXPECT_EQ(parse_method("saliency"), AttributionMethod::SaliencyMap);
    EXPECT_EQ(parse_method("deconvnet"), AttributionMethod::DeconvNet);
    EXPECT_EQ(parse_method("guided"), AttributionMethod::GuidedBackprop);
    EXPECT_THROW(parse_method("lrp"), ParseError);
    for (auto m : kMethods) EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_TRUE(needs_relu_mask(AttributionMethod::SaliencyMap));
    EXPECT_FALSE(needs_relu_mask(AttributionMethod::DeconvNet));
    EXPECT_TRUE(needs_relu_mask(AttributionMethod::GuidedBackprop));
}

TEST(SeedGradient, OneHot) {
    const Tensor logits(Shape::flat(10));
    const auto g = seed_gradient(kDp, logits, 3);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(dequantize(g[i], kQ8_8), i == 3 ? 1.0 : 0.0);
    const auto one = seed_gradient(FloatDatapath{}, FloatTensor(Shape::flat(1), 4.0), 0);
    EXPECT_EQ(one[0], 1.0);
    EXPECT_THROW(seed_gradient(kDp, logits, 10), ValidationError);
}

TEST(Argmax, TiesGoLow) {
    EXPECT_EQ(argmax(FloatTensor(Shape::flat(4), std::vector<double>{1, 3, 3, 2})), 1u);
    EXPECT_EQ(argmax(FloatTensor(Shape::flat(3), 5.0)), 0u);
    EXPECT_THROW(argmax(FloatTensor{}), ValidationError);
}

TEST(Sparsity, Examples) {
    EXPECT_EQ(sparsity(FloatTensor(Shape::flat(5))), 1.0);
    EXPECT_EQ(sparsity(FloatTensor(Shape::flat(5), 2.0)), 0.0);
    EXPECT_EQ(sparsity(FloatTensor(Shape::flat(4), std::vector<double>{0, 1, 0, 2})), 0.5);
    EXPECT_THROW(sparsity(FloatTensor{}), ValidationError);
}

TEST(Heatmap, Examples) {
    const auto flat = to_heatmap(FloatTensor(Shape{3, 4, 4}, 0.7));
    EXPECT_EQ(flat.height, 4u);
    EXPECT_EQ(flat.pixels, std::vector<std::uint8_t>(16, 128));

    FloatTensor one(Shape{3, 4, 4});
    one.at(1, 2, 3) = -2.0;
    const auto hm = to_heatmap(one);
    EXPECT_EQ(hm.pixels[2 * 4 + 3], 255);
    EXPECT_EQ(*std::min_element(hm.pixels.begin(), hm.pixels.end()), 0);

    // channels (-3, 1, 2) at one pixel, the rest zero except a 1.5 elsewhere
    FloatTensor px(Shape{3, 1, 2});
    px.at(0, 0, 0) = -3;
    px.at(1, 0, 0) = 1;
    px.at(2, 0, 0) = 2;
    px.at(0, 0, 1) = 1.5;
    EXPECT_EQ(to_heatmap(px, ChannelReduction::MaxAbs).pixels, (std::vector<std::uint8_t>{255, 0}));
    // 3 vs 1.5 after max_abs, 6 vs 1.5 after sum_abs, 0 vs 1.5 signed
    px.at(0, 0, 1) = 0;
    px.at(1, 0, 1) = 1.5;
    EXPECT_EQ(to_heatmap(px, ChannelReduction::SignedSum).pixels, (std::vector<std::uint8_t>{0, 255}));
    EXPECT_EQ(to_heatmap(px, ChannelReduction::SumAbs).pixels, (std::vector<std::uint8_t>{255, 0}));
    EXPECT_EQ(parse_reduction("sum_abs"), ChannelReduction::SumAbs);
    EXPECT_THROW(parse_reduction("mean"), ParseError);
}

TEST(Attribute, ZeroImageZeroWeights) {
    const auto net = NetworkSpec::cifar10(true);
    auto fw = zero_weights(net);
    fw.fc(8).bias[4] = 0.5;
    const auto w = quantize_weights(fw, kQ8_8);
    for (auto m : kMethods) {
        const auto r = attribute(kDp, net, w, Tensor(net.input_dims()), m, TileConfig{});
        EXPECT_EQ(r.class_index, 4u);
        EXPECT_EQ(dequantize(r.logits[4], kQ8_8), 0.5);
        EXPECT_EQ(r.relevance.values, Tensor(net.input_dims()));
        EXPECT_EQ(r.relevance.method, m);
        EXPECT_EQ(r.cost, estimate_cost(net, m, TileConfig{}));
        EXPECT_EQ(r.grad_saturations.size(), net.size());
    }
}

TEST(Attribute, ClassOverride) {
    const auto net = relu_net();
    Rng rng(1);
    const auto w = quantize_weights(testing::random_weights(net, rng, -0.5, 0.5), kQ8_8);
    const auto img = quantize_tensor(testing::random_float_tensor(net.input_dims(), rng), kQ8_8);
    const auto r = attribute(kDp, net, w, img, AttributionMethod::SaliencyMap, TileConfig{}, {7, 1});
    EXPECT_EQ(r.class_index, 7u);
    EXPECT_EQ(r.relevance.class_index, 7u);
    EXPECT_THROW(attribute(kDp, net, w, img, AttributionMethod::SaliencyMap, TileConfig{}, {10, 1}), ValidationError);
}

// Float datapath gradient chain vs central differences of the oracle.
TEST(RunAttribution, SaliencyMatchesFiniteDifferences) {
    const NetworkSpec net(Shape{1, 8, 8}, {LayerSpec::conv(1, 3, true), LayerSpec::maxpool(), LayerSpec::fc(48, 10)});
    Rng rng(2);
    int checked = 0;
    while (checked < 5) {
        const auto w = testing::random_weights(net, rng, -1, 1);
        const auto x = testing::random_float_tensor(net.input_dims(), rng);
        if (oracle::kink_margin(net, w, x) < 1e-2) continue;
        const auto t = run_attribution(FloatDatapath{}, net, w, x, AttributionMethod::SaliencyMap, TileConfig{}, 2);
        const auto fd = oracle::finite_diff_grad(net, w, x, 2, 1e-3);
        double scale = 0, err = 0;
        for (std::size_t i = 0; i < fd.size(); ++i) {
            scale = std::max(scale, std::abs(fd[i]));
            err = std::max(err, std::abs(fd[i] - t.relevance[i]));
        }
        EXPECT_LE(err, 1e-3 * scale);
        ++checked;
    }
}

TEST(RunAttribution, MethodsAgreeWithoutRelu) {
    const NetworkSpec net(Shape{2, 8, 8},
                          {LayerSpec::conv(2, 3), LayerSpec::maxpool(), LayerSpec::conv(3, 2), LayerSpec::fc(32, 10)});
    Rng rng(3);
    const auto w = quantize_weights(testing::random_weights(net, rng, -0.5, 0.5), kQ8_8);
    const auto img = quantize_tensor(testing::random_float_tensor(net.input_dims(), rng), kQ8_8);
    const auto sal = run_attribution(kDp, net, w, img, AttributionMethod::SaliencyMap, TileConfig{});
    for (auto m : kMethods)
        EXPECT_EQ(run_attribution(kDp, net, w, img, m, TileConfig{}).relevance, sal.relevance);
}

TEST(RunAttribution, ReluSiteSupportOrdering) {
    const auto net = relu_net();
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto w = quantize_weights(testing::random_weights(net, rng, -0.5, 0.5), kQ8_8);
        const auto img = quantize_tensor(testing::random_float_tensor(net.input_dims(), rng), kQ8_8);
        const auto sal = run_attribution(kDp, net, w, img, AttributionMethod::SaliencyMap, TileConfig{});
        const auto dec = run_attribution(kDp, net, w, img, AttributionMethod::DeconvNet, TileConfig{});
        const auto gbp = run_attribution(kDp, net, w, img, AttributionMethod::GuidedBackprop, TileConfig{});
        ASSERT_EQ(sal.steps.size(), gbp.steps.size());
        // The first ReLU site receives the same incoming gradient in all three
        // runs, so support containment holds exactly there.
        std::size_t first = 0;
        while (sal.steps[first].stage != "relu_bp") ++first;
        const auto& gs = sal.steps[first].grad;
        const auto& gd = dec.steps[first].grad;
        const auto& gg = gbp.steps[first].grad;
        for (std::size_t i = 0; i < gg.size(); ++i)
            if (gg[i].raw != 0) {
                EXPECT_NE(gs[i].raw, 0);
                EXPECT_NE(gd[i].raw, 0);
            }
        for (std::size_t s = 0; s < gbp.steps.size(); ++s)
            if (gbp.steps[s].stage == "relu_bp")
                for (std::size_t i = 0; i < gbp.steps[s].grad.size(); ++i) {
                    EXPECT_GE(gbp.steps[s].grad[i].raw, 0);
                    EXPECT_GE(dec.steps[s].grad[i].raw, 0);
                    // guided zeroes wherever the forward activation was not positive
                    if (gbp.steps[s].grad[i].raw != 0) {
                        ASSERT_TRUE(gbp.forward.masks.relu[gbp.steps[s].layer]);
                        EXPECT_TRUE(gbp.forward.masks.relu[gbp.steps[s].layer]->test(i));
                    }
                }
    }
}

TEST(RunAttribution, StepSequence) {
    const auto net = relu_net();
    const auto w = quantize_weights(zero_weights(net), kQ8_8);
    const auto t = run_attribution(kDp, net, w, Tensor(net.input_dims()), AttributionMethod::GuidedBackprop, TileConfig{});
    std::vector<std::string_view> stages;
    for (const auto& s : t.steps) stages.push_back(s.stage);
    EXPECT_EQ(stages, (std::vector<std::string_view>{"vmm_bp", "relu_bp", "vmm_bp", "relu_bp", "conv2d_bp",
                                                     "unpool_bp", "relu_bp", "conv2d_bp"}));
    EXPECT_EQ(t.relevance.shape(), net.input_dims());
    EXPECT_EQ(intermediate_sparsity(t), 1.0);
}

TEST(Attribute, DeterministicAcrossThreadsAndTiles) {
    const auto net = NetworkSpec::cifar10(true);
    Rng rng(5);
    const auto w = quantize_weights(testing::random_weights(net, rng, -0.1, 0.1), kQ8_8);
    const auto img = quantize_tensor(testing::random_float_tensor(net.input_dims(), rng, 0, 1), kQ8_8);
    for (auto m : kMethods) {
        const auto a = attribute(kDp, net, w, img, m, TileConfig{}, {std::nullopt, 1});
        const auto b = attribute(kDp, net, w, img, m, TileConfig{}, {std::nullopt, 4});
        TileConfig odd = TileConfig::from_unroll_string("2x3x5");
        odd.t_oh = 3;
        odd.t_ow = 5;
        odd.t_ic = 7;
        odd.t_oc = 9;
        odd.t_in = 33;
        odd.t_out = 5;
        const auto c = attribute(kDp, net, w, img, m, odd, {std::nullopt, 3});
        EXPECT_EQ(a.relevance.values, b.relevance.values);
        EXPECT_EQ(a.relevance.values, c.relevance.values);
        EXPECT_EQ(a.logits, c.logits);
        EXPECT_EQ(a.intermediate_sparsity, c.intermediate_sparsity);
    }
}

}  // namespace
}  // namespace exai
