// SPDX-License-Identifier: Apache-2.0
#include "exai/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace exai::oracle {

namespace {

FloatTensor conv_ref(const FloatTensor& in, const ConvParams<double>& p) {
    const long H = long(in.shape().h), W = long(in.shape().w);
    const long K = long(p.dims.kh), P = (K - 1) / 2;
    FloatTensor out(Shape{p.dims.oc, in.shape().h, in.shape().w});
    for (std::size_t o = 0; o < p.dims.oc; ++o)
        for (long y = 0; y < H; ++y)
            for (long x = 0; x < W; ++x) {
                double s = p.bias[o];
                for (std::size_t i = 0; i < p.dims.ic; ++i)
                    for (long ky = 0; ky < K; ++ky)
                        for (long kx = 0; kx < K; ++kx) {
                            const long sy = y + ky - P, sx = x + kx - P;
                            if (sy < 0 || sx < 0 || sy >= H || sx >= W) continue;
                            s += in.at(i, std::size_t(sy), std::size_t(sx)) * p.w(o, i, std::size_t(ky), std::size_t(kx));
                        }
                out.at(o, std::size_t(y), std::size_t(x)) = s;
            }
    return out;
}

// Scatter form: every output gradient spreads over its receptive field.
FloatTensor conv_grad_ref(const FloatTensor& g, const ConvParams<double>& p) {
    const long H = long(g.shape().h), W = long(g.shape().w);
    const long K = long(p.dims.kh), P = (K - 1) / 2;
    FloatTensor out(Shape{p.dims.ic, g.shape().h, g.shape().w});
    for (std::size_t o = 0; o < p.dims.oc; ++o)
        for (long y = 0; y < H; ++y)
            for (long x = 0; x < W; ++x) {
                const double go = g.at(o, std::size_t(y), std::size_t(x));
                if (go == 0.0) continue;
                for (std::size_t i = 0; i < p.dims.ic; ++i)
                    for (long ky = 0; ky < K; ++ky)
                        for (long kx = 0; kx < K; ++kx) {
                            const long sy = y + ky - P, sx = x + kx - P;
                            if (sy < 0 || sx < 0 || sy >= H || sx >= W) continue;
                            out.at(i, std::size_t(sy), std::size_t(sx)) += go * p.w(o, i, std::size_t(ky), std::size_t(kx));
                        }
            }
    return out;
}

FloatTensor fc_ref(const FloatTensor& in, const FcParams<double>& p) {
    FloatTensor out(Shape::flat(p.out));
    for (std::size_t o = 0; o < p.out; ++o) {
        double s = p.bias[o];
        for (std::size_t i = 0; i < p.in; ++i) s += p.w(o, i) * in[i];
        out[o] = s;
    }
    return out;
}

FloatTensor pool_ref(const FloatTensor& in) {
    const Shape s = in.shape();
    FloatTensor out(Shape{s.c, s.h / 2, s.w / 2});
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t y = 0; y < s.h / 2; ++y)
            for (std::size_t x = 0; x < s.w / 2; ++x)
                out.at(c, y, x) = std::max({in.at(c, 2 * y, 2 * x), in.at(c, 2 * y, 2 * x + 1), in.at(c, 2 * y + 1, 2 * x),
                                            in.at(c, 2 * y + 1, 2 * x + 1)});
    return out;
}

void relu_inplace(FloatTensor& t) {
    for (auto& v : t.values()) v = v > 0.0 ? v : 0.0;
}

double relu_rule(AttributionMethod m, double forward_in, double grad) {
    const bool act = forward_in > 0.0;
    switch (m) {
        case AttributionMethod::SaliencyMap: return act ? grad : 0.0;
        case AttributionMethod::DeconvNet: return grad > 0.0 ? grad : 0.0;
        case AttributionMethod::GuidedBackprop: return act && grad > 0.0 ? grad : 0.0;
    }
    return 0.0;
}

}  // namespace

ForwardRef forward_ref(const NetworkSpec& net, const FloatWeights& w, const FloatTensor& image) {
    if (image.shape() != net.input_dims()) throw ValidationError("forward_ref: image dims mismatch");
    check_weights(net, w);
    ForwardRef r;
    r.pre_relu.resize(net.size());
    FloatTensor x = image;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& l = net.layer(i);
        switch (l.kind) {
            case LayerKind::Conv2d:
                x = conv_ref(x, w.conv(i));
                if (l.fused_relu) {
                    r.pre_relu[i] = x;
                    relu_inplace(x);
                }
                break;
            case LayerKind::MaxPool2d: x = pool_ref(x); break;
            case LayerKind::FC: x = fc_ref(x, w.fc(i)); break;
            case LayerKind::ReLU: relu_inplace(x); break;
        }
        r.activations.push_back(x);
    }
    r.logits = x;
    return r;
}

BackwardRef backward_trace(const NetworkSpec& net, const FloatWeights& w, const FloatTensor& image,
                           AttributionMethod method, std::size_t c) {
    const ForwardRef fwd = forward_ref(net, w, image);
    if (c >= fwd.logits.size()) throw ValidationError("backward_ref: class index out of range");
    BackwardRef r;
    FloatTensor g(fwd.logits.shape());
    g[c] = 1.0;
    for (std::size_t i = net.size(); i-- > 0;) {
        const auto& l = net.layer(i);
        const FloatTensor& layer_in = i == 0 ? image : fwd.activations[i - 1];
        switch (l.kind) {
            case LayerKind::FC: {
                const auto& p = w.fc(i);
                FloatTensor gi(net.input_of(i));
                for (std::size_t o = 0; o < p.out; ++o)
                    for (std::size_t k = 0; k < p.in; ++k) gi[k] += p.w(o, k) * g[o];
                g = std::move(gi);
                break;
            }
            case LayerKind::ReLU:
                for (std::size_t k = 0; k < g.size(); ++k) g[k] = relu_rule(method, layer_in[k], g[k]);
                r.relu_site_grads.push_back(g);
                break;
            case LayerKind::MaxPool2d: {
                const Shape s = layer_in.shape();
                FloatTensor gi(s);
                for (std::size_t ch = 0; ch < s.c; ++ch)
                    for (std::size_t y = 0; y < s.h / 2; ++y)
                        for (std::size_t x = 0; x < s.w / 2; ++x) {
                            // first maximum in row-major window order
                            std::size_t by = 2 * y, bx = 2 * x;
                            for (std::size_t dy = 0; dy < 2; ++dy)
                                for (std::size_t dx = 0; dx < 2; ++dx)
                                    if (layer_in.at(ch, 2 * y + dy, 2 * x + dx) > layer_in.at(ch, by, bx)) {
                                        by = 2 * y + dy;
                                        bx = 2 * x + dx;
                                    }
                            gi.at(ch, by, bx) = g.at(ch, y, x);
                        }
                g = std::move(gi);
                break;
            }
            case LayerKind::Conv2d:
                if (l.fused_relu) {
                    for (std::size_t k = 0; k < g.size(); ++k) g[k] = relu_rule(method, fwd.pre_relu[i][k], g[k]);
                    r.relu_site_grads.push_back(g);
                }
                g = conv_grad_ref(g, w.conv(i));
                break;
        }
    }
    r.relevance = std::move(g);
    return r;
}

FloatTensor finite_diff_grad(const std::function<double(const FloatTensor&)>& f, const FloatTensor& x, double eps) {
    if (!(eps > 0.0)) throw ValidationError("finite_diff_grad: eps must be positive");
    FloatTensor g(x.shape());
    FloatTensor probe = x;
    for (std::size_t k = 0; k < x.size(); ++k) {
        probe[k] = x[k] + eps;
        const double up = f(probe);
        probe[k] = x[k] - eps;
        const double down = f(probe);
        probe[k] = x[k];
        g[k] = (up - down) / (2.0 * eps);
    }
    return g;
}

FloatTensor finite_diff_grad(const NetworkSpec& net, const FloatWeights& w, const FloatTensor& image, std::size_t c,
                             double eps) {
    return finite_diff_grad([&](const FloatTensor& x) { return forward_ref(net, w, x).logits.at(c, 0, 0); }, image,
                            eps);
}

double kink_margin(const NetworkSpec& net, const FloatWeights& w, const FloatTensor& image) {
    const ForwardRef fwd = forward_ref(net, w, image);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& l = net.layer(i);
        const FloatTensor& in = i == 0 ? image : fwd.activations[i - 1];
        if (l.kind == LayerKind::ReLU)
            for (double v : in.values()) margin = std::min(margin, std::abs(v));
        if (l.kind == LayerKind::Conv2d && l.fused_relu)
            for (double v : fwd.pre_relu[i].values()) margin = std::min(margin, std::abs(v));
        if (l.kind == LayerKind::MaxPool2d) {
            const Shape s = in.shape();
            for (std::size_t ch = 0; ch < s.c; ++ch)
                for (std::size_t y = 0; y < s.h / 2; ++y)
                    for (std::size_t x = 0; x < s.w / 2; ++x) {
                        double v[4] = {in.at(ch, 2 * y, 2 * x), in.at(ch, 2 * y, 2 * x + 1), in.at(ch, 2 * y + 1, 2 * x),
                                       in.at(ch, 2 * y + 1, 2 * x + 1)};
                        std::sort(v, v + 4);
                        margin = std::min(margin, v[3] - v[2]);
                    }
        }
    }
    return margin;
}

}  // namespace exai::oracle
