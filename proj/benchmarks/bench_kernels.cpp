// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "exai/attribution.hpp"
#include "exai/backward.hpp"
#include "exai/forward.hpp"

namespace {

using namespace exai;

const FixedDatapath kDp{kQ8_8};

Tensor random_tensor(Shape s, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> d(-256, 256);
    Tensor t(s);
    for (auto& v : t.values()) v = Fxp16{static_cast<std::int16_t>(d(rng))};
    return t;
}

WeightStore random_weights(const NetworkSpec& net, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-0.05, 0.05);
    return quantize_weights(zero_weights(net).map([&](double) { return d(rng); }), kQ8_8);
}

TileConfig tiles_for(std::int64_t lanes) {
    TileConfig t;
    t.n_oh = t.n_ow = static_cast<std::size_t>(lanes);
    return t;
}

// Second CIFAR-10 conv: 32 -> 32 channels on 32x32.
void BM_Conv2dFp(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto in = random_tensor({32, 32, 32}, rng);
    const NetworkSpec net(Shape{32, 32, 32}, {LayerSpec::conv(32, 32)});
    const auto w = random_weights(net, rng);
    const auto t = tiles_for(state.range(0));
    const auto threads = static_cast<unsigned>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(conv2d_fp(kDp, in, w.conv(0), t, threads));
    state.SetItemsProcessed(state.iterations() * 32 * 32 * 32 * 32 * 9);
}
BENCHMARK(BM_Conv2dFp)->Args({4, 1})->Args({8, 1})->Args({4, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_Conv2dBp(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto g = random_tensor({32, 32, 32}, rng);
    const NetworkSpec net(Shape{32, 32, 32}, {LayerSpec::conv(32, 32)});
    const auto w = random_weights(net, rng);
    for (auto _ : state) benchmark::DoNotOptimize(conv2d_bp(kDp, g, w.conv(0), TileConfig{}));
    state.SetItemsProcessed(state.iterations() * 32 * 32 * 32 * 32 * 9);
}
BENCHMARK(BM_Conv2dBp)->Unit(benchmark::kMillisecond);

void BM_VmmFp(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const auto x = random_tensor(Shape::flat(4096), rng);
    const NetworkSpec net(Shape::flat(4096), {LayerSpec::fc(4096, 128)});
    const auto w = random_weights(net, rng);
    TileConfig t;
    t.t_out = t.vmm_unroll = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(vmm_fp(kDp, x, w.fc(0), t));
    state.SetItemsProcessed(state.iterations() * 4096 * 128);
}
BENCHMARK(BM_VmmFp)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_AttributeCifar10(benchmark::State& state) {
    std::mt19937_64 rng(4);
    const auto net = NetworkSpec::cifar10(true);
    const auto w = random_weights(net, rng);
    std::uniform_int_distribution<int> px(0, 256);
    Tensor img(net.input_dims());
    for (auto& v : img.values()) v = Fxp16{static_cast<std::int16_t>(px(rng))};
    const auto method = static_cast<AttributionMethod>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(attribute(kDp, net, w, img, method, TileConfig{}));
    state.SetLabel(std::string(to_string(method)));
}
BENCHMARK(BM_AttributeCifar10)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
