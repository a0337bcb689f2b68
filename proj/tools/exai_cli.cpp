// SPDX-License-Identifier: Apache-2.0
// exai: fixed-point CNN inference, gradient attribution and cost reports.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "exai/attribution.hpp"
#include "exai/costmodel.hpp"
#include "exai/error.hpp"
#include "exai/io.hpp"
#include "exai/model.hpp"
#include "exai/parallel.hpp"

namespace {

using namespace exai;

enum Exit : int { kOk = 0, kUsage = 1, kIo = 2, kValidation = 3 };

// Raised for flag values that parse but make no sense together.
struct UsageError : Error {
    using Error::Error;
};

struct RunConfig {
    std::string model;
    std::string weights;
    std::string image;
    std::string method = "guided";
    std::string tiles = "4x4x16";
    std::string format;
    std::string out_prefix = "exai_out";
    std::string reduction = "max_abs";
    std::optional<std::size_t> class_index;
    unsigned threads = 0;
};

struct Resolved {
    AttributionMethod method{};
    TileConfig tiles;
    std::optional<FxpFormat> format;
    ChannelReduction reduction{};
    unsigned threads = 1;
};

// Flag values are checked before any file is touched so that typos exit as
// usage errors.
Resolved resolve(const RunConfig& cfg) {
    Resolved r;
    try {
        r.method = parse_method(cfg.method);
        r.tiles = TileConfig::from_unroll_string(cfg.tiles);
        if (!cfg.format.empty()) r.format = FxpFormat::parse(cfg.format);
        r.reduction = parse_reduction(cfg.reduction);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    r.threads = cfg.threads ? cfg.threads : max_threads();
    return r;
}

NetworkSpec load_model(const RunConfig& cfg, const Resolved& r) {
    const auto bytes = read_file(cfg.model, "model config");
    const std::string text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    NetworkSpec net = load_network(text);
    if (r.format) net = NetworkSpec(net.input_dims(), net.layers(), *r.format);
    return net;
}

struct Inputs {
    NetworkSpec net;
    WeightStore weights;
    Tensor image;
};

Inputs load_inputs(const RunConfig& cfg, const Resolved& r) {
    Inputs in{load_model(cfg, r), {}, {}};
    const FxpFormat fmt = in.net.fxp_format();
    const auto loaded = load_weights(read_file(cfg.weights, "weight file"), in.net, fmt);
    if (loaded.stats.saturated)
        std::fprintf(stderr, "exai: warning: %zu of %zu weights saturated in %s\n", loaded.stats.saturated,
                     loaded.stats.total, fmt.to_string().c_str());
    in.weights = loaded.weights;
    QuantStats img_stats;
    in.image = quantize_tensor(decode_image(read_file(cfg.image, "image file"), in.net.input_dims()), fmt, &img_stats);
    if (img_stats.saturated)
        std::fprintf(stderr, "exai: warning: %zu image values saturated\n", img_stats.saturated);
    return in;
}

void print_logits(const Tensor& logits, FxpFormat fmt) {
    std::printf("logits:");
    for (const Fxp16 v : logits.values()) std::printf(" %.6f", dequantize(v, fmt));
    std::printf("\n");
}

int cmd_infer(const RunConfig& cfg) {
    const Resolved r = resolve(cfg);
    const Inputs in = load_inputs(cfg, r);
    const FixedDatapath dp{in.net.fxp_format()};
    const auto fp = forward_pass(dp, in.net, in.weights, in.image, r.tiles, r.method, r.threads);
    std::size_t sat = 0;
    for (const auto& s : fp.layer_stats) sat += s.total();
    print_logits(fp.logits, dp.fmt);
    std::printf("class: %zu\n", argmax(fp.logits));
    if (sat) std::fprintf(stderr, "exai: warning: %zu activation saturations\n", sat);
    return kOk;
}

int cmd_attribute(const RunConfig& cfg) {
    const Resolved r = resolve(cfg);
    const Inputs in = load_inputs(cfg, r);
    const FixedDatapath dp{in.net.fxp_format()};
    const auto res = attribute(dp, in.net, in.weights, in.image, r.method, r.tiles, {cfg.class_index, r.threads});

    const std::string prefix = cfg.out_prefix;
    const std::string pgm = prefix + ".pgm", raw = prefix + ".relevance.f32", cost = prefix + ".cost.json";
    write_file(pgm, encode_pgm(to_heatmap(res.relevance, r.reduction)));
    write_file(raw, encode_f32(res.relevance.real()));
    const std::string json = cost_report_json(res.cost) + "\n";
    write_file(cost, std::as_bytes(std::span(json)));

    print_logits(res.logits, dp.fmt);
    std::printf("class: %zu\n", res.class_index);
    std::printf("method: %s\n", std::string(to_string(r.method)).c_str());
    for (const auto& s : res.grad_saturations)
        std::printf("grad_saturations[%zu] %s: %zu\n", s.layer, std::string(to_string(s.kind)).c_str(), s.saturations);
    std::printf("intermediate_sparsity: %.6f\n", res.intermediate_sparsity);
    std::printf("relevance_sparsity: %.6f\n", sparsity(res.relevance.values));
    std::printf("wrote: %s %s %s\n", pgm.c_str(), raw.c_str(), cost.c_str());
    return kOk;
}

int cmd_report(const RunConfig& cfg) {
    const Resolved r = resolve(cfg);
    const NetworkSpec net = load_model(cfg, r);
    std::printf("%s\n", cost_report_json(estimate_cost(net, r.method, r.tiles)).c_str());
    return kOk;
}

int run(int argc, char** argv) {
    CLI::App app{"Fixed-point CNN inference and gradient attribution"};
    app.name("exai");
    app.require_subcommand(1);
    RunConfig cfg;

    const auto common = [&](CLI::App* sub, bool data) {
        sub->add_option("--model", cfg.model, "network config (JSON)")->required();
        if (data) {
            sub->add_option("--weights", cfg.weights, "EXAI weight file")->required();
            sub->add_option("--image", cfg.image, "input image: PPM (P6) or raw float32 CHW")->required();
            sub->add_option("--format", cfg.format, "fixed-point format override, e.g. q8.8");
        }
        sub->add_option("--method", cfg.method, "saliency | deconvnet | guided")->capture_default_str();
        sub->add_option("--tiles", cfg.tiles, "unroll factors OHxOWxVMM")->capture_default_str();
        if (data) sub->add_option("--threads", cfg.threads, "worker threads (0 = hardware concurrency)");
    };

    auto* infer = app.add_subcommand("infer", "run the forward pass and print logits");
    common(infer, true);
    auto* attr = app.add_subcommand("attribute", "compute a relevance map and write heatmap, raw map and cost");
    common(attr, true);
    attr->add_option("--out-prefix", cfg.out_prefix, "output path prefix")->capture_default_str();
    attr->add_option("--class", cfg.class_index, "attribute this class instead of the argmax");
    attr->add_option("--reduction", cfg.reduction, "heatmap channel reduction: max_abs | sum_abs | signed_sum")
        ->capture_default_str();
    auto* report = app.add_subcommand("report", "print the cost report without running the network");
    common(report, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "exai: usage error: %s\n", e.what());
        return kUsage;
    }

    try {
        if (*infer) return cmd_infer(cfg);
        if (*attr) return cmd_attribute(cfg);
        return cmd_report(cfg);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "exai: usage error: %s\n", e.what());
        return kUsage;
    } catch (const IoError& e) {
        std::fprintf(stderr, "exai: error: %s\n", e.what());
        return kIo;
    } catch (const Error& e) {
        std::fprintf(stderr, "exai: error: %s\n", e.what());
        return kValidation;
    }
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "exai: internal error: %s\n", e.what());
        return kValidation;
    }
}
