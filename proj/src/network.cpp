#include "sec/network.hpp"

#include <cmath>

namespace sec {

NetConfig NetConfig::toy(int classes, double dropout_rate) {
    NetConfig cfg;
    cfg.classes = classes;
    cfg.output_stride = 2;
    cfg.layers = {
        LayerSpec::conv(3, 3, 16, /*stride=*/2, /*pad=*/1),
        LayerSpec::relu(),
        LayerSpec::conv(3, 16, 32, /*stride=*/1, /*pad=*/2, /*dilation=*/2),
        LayerSpec::relu(),
        LayerSpec::dropout(dropout_rate),
        LayerSpec::conv(1, 32, classes, /*stride=*/1, /*pad=*/0),
    };
    return cfg;
}

void NetConfig::validate() const {
    if (classes < 2) throw FieldError("net config: need at least 2 classes");
    if (output_stride < 1) throw FieldError("net config: output stride must be >= 1");
    int last_out = -1;
    for (const auto& l : layers) {
        if (l.kind != LayerKind::Conv) continue;
        if (l.ksize < 1 || l.in_channels < 1 || l.out_channels < 1 || l.stride < 1 ||
            l.pad < 0 || l.dilation < 1)
            throw FieldError("net config: invalid conv spec");
        last_out = l.out_channels;
    }
    if (last_out != classes)
        throw FieldError("net config: final conv must emit one channel per class");
}

static int conv_out_dim(int in, const LayerSpec& s) {
    int eff = s.dilation * (s.ksize - 1) + 1;
    return (in + 2 * s.pad - eff) / s.stride + 1;
}

Tensor3 conv_forward(const Tensor3& x, const LayerSpec& spec, const ConvParams& p) {
    const int oh = conv_out_dim(x.height, spec);
    const int ow = conv_out_dim(x.width, spec);
    if (oh < 1 || ow < 1) throw FieldError("conv: output dims collapse to zero");
    if (x.channels != spec.in_channels) throw FieldError("conv: channel mismatch");

    Tensor3 y(spec.out_channels, oh, ow);
    const int k = spec.ksize;
    for (int oc = 0; oc < spec.out_channels; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = p.b[oc];
                const int base_y = oy * spec.stride - spec.pad;
                const int base_x = ox * spec.stride - spec.pad;
                for (int ic = 0; ic < spec.in_channels; ++ic) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = base_y + ky * spec.dilation;
                        if (iy < 0 || iy >= x.height) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = base_x + kx * spec.dilation;
                            if (ix < 0 || ix >= x.width) continue;
                            acc += x.at(ic, iy, ix) *
                                   p.w[((static_cast<size_t>(oc) * spec.in_channels + ic) * k + ky) * k + kx];
                        }
                    }
                }
                y.at(oc, oy, ox) = acc;
            }
        }
    }
    return y;
}

void conv_backward(const Tensor3& x, const LayerSpec& spec, const ConvParams& p,
                   const Tensor3& dy, Tensor3* dx, ConvParams* dp) {
    const int k = spec.ksize;
    if (dx) *dx = Tensor3(x.channels, x.height, x.width);
    if (dp) {
        dp->w.assign(p.w.size(), 0.0);
        dp->b.assign(p.b.size(), 0.0);
    }
    for (int oc = 0; oc < spec.out_channels; ++oc) {
        for (int oy = 0; oy < dy.height; ++oy) {
            for (int ox = 0; ox < dy.width; ++ox) {
                const double g = dy.at(oc, oy, ox);
                if (g == 0.0) continue;
                if (dp) dp->b[oc] += g;
                const int base_y = oy * spec.stride - spec.pad;
                const int base_x = ox * spec.stride - spec.pad;
                for (int ic = 0; ic < spec.in_channels; ++ic) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = base_y + ky * spec.dilation;
                        if (iy < 0 || iy >= x.height) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = base_x + kx * spec.dilation;
                            if (ix < 0 || ix >= x.width) continue;
                            const size_t wi =
                                ((static_cast<size_t>(oc) * spec.in_channels + ic) * k + ky) * k + kx;
                            if (dp) dp->w[wi] += g * x.at(ic, iy, ix);
                            if (dx) dx->at(ic, iy, ix) += g * p.w[wi];
                        }
                    }
                }
            }
        }
    }
}

Tensor3 relu_forward(const Tensor3& x) {
    Tensor3 y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor3 relu_backward(const Tensor3& x, const Tensor3& dy) {
    Tensor3 dx = dy;
    for (size_t i = 0; i < dx.data.size(); ++i)
        if (x.data[i] <= 0.0) dx.data[i] = 0.0;
    return dx;
}

Tensor3 dropout_forward(const Tensor3& x, double rate, const std::vector<uint8_t>& keep) {
    if (keep.size() != x.data.size()) throw FieldError("dropout: mask size mismatch");
    const double scale = 1.0 / (1.0 - rate);  // inverted dropout
    Tensor3 y = x;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = keep[i] ? y.data[i] * scale : 0.0;
    return y;
}

Tensor3 dropout_backward(double rate, const std::vector<uint8_t>& keep, const Tensor3& dy) {
    const double scale = 1.0 / (1.0 - rate);
    Tensor3 dx = dy;
    for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] = keep[i] ? dx.data[i] * scale : 0.0;
    return dx;
}

NetParams init_params(const NetConfig& config, uint64_t rng_seed) {
    config.validate();
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    // Find the last conv layer: the prediction layer gets std 0.1.
    int last_conv = -1;
    for (int i = 0; i < static_cast<int>(config.layers.size()); ++i)
        if (config.layers[i].kind == LayerKind::Conv) last_conv = i;

    NetParams params;
    for (int i = 0; i < static_cast<int>(config.layers.size()); ++i) {
        const auto& l = config.layers[i];
        if (l.kind != LayerKind::Conv) continue;
        ConvParams p;
        const size_t wsize =
            static_cast<size_t>(l.out_channels) * l.in_channels * l.ksize * l.ksize;
        const double fan_in = static_cast<double>(l.in_channels) * l.ksize * l.ksize;
        const double std_dev = (i == last_conv) ? 0.1 : std::sqrt(2.0 / fan_in);
        p.w.resize(wsize);
        for (double& w : p.w) w = std_dev * unit(rng);
        p.b.assign(l.out_channels, 0.0);
        params.convs.push_back(std::move(p));
    }
    return params;
}

Tensor3 image_to_tensor(const Image& image) {
    Tensor3 t(3, image.height, image.width);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) t.at(c, y, x) = image.at(y, x, c);
    return t;
}

ScoreField forward(const NetConfig& config, const NetParams& params, const Image& image,
                   bool train_mode, std::mt19937_64& rng, ForwardCache* cache) {
    config.validate();
    if (image.height % config.output_stride != 0 || image.width % config.output_stride != 0)
        throw FieldError("forward: image dims not divisible by output stride");

    Tensor3 act = image_to_tensor(image);
    if (cache) {
        cache->inputs.clear();
        cache->dropout_keep.clear();
    }

    size_t conv_idx = 0;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (const auto& l : config.layers) {
        if (cache) cache->inputs.push_back(act);
        switch (l.kind) {
            case LayerKind::Conv:
                act = conv_forward(act, l, params.convs.at(conv_idx++));
                break;
            case LayerKind::Relu:
                act = relu_forward(act);
                break;
            case LayerKind::Dropout: {
                std::vector<uint8_t> keep(act.data.size(), 1);
                if (train_mode)
                    for (auto& kb : keep) kb = uniform(rng) >= l.rate ? 1 : 0;
                const double rate = train_mode ? l.rate : 0.0;
                act = dropout_forward(act, rate, keep);
                if (cache) {
                    cache->dropout_keep.push_back(std::move(keep));
                    cache->dropout_rate.push_back(rate);
                }
                break;
            }
        }
    }

    if (act.channels != config.classes) throw FieldError("forward: class channel mismatch");
    const int eh = image.height / config.output_stride;
    const int ew = image.width / config.output_stride;
    if (act.height != eh || act.width != ew)
        throw FieldError("forward: output dims do not match the configured stride");

    ScoreField scores(act.height, act.width, config.classes);
    for (int y = 0; y < act.height; ++y)
        for (int x = 0; x < act.width; ++x)
            for (int c = 0; c < config.classes; ++c) scores.at(y, x, c) = act.at(c, y, x);
    return scores;
}

NetGrads zero_grads(const NetConfig& config) {
    NetGrads grads;
    for (const auto& l : config.layers) {
        if (l.kind != LayerKind::Conv) continue;
        ConvParams p;
        p.w.assign(static_cast<size_t>(l.out_channels) * l.in_channels * l.ksize * l.ksize, 0.0);
        p.b.assign(l.out_channels, 0.0);
        grads.convs.push_back(std::move(p));
    }
    return grads;
}

NetGrads backward(const NetConfig& config, const NetParams& params,
                  const ForwardCache& cache, const GradField& dL_dscores) {
    if (cache.inputs.size() != config.layers.size())
        throw FieldError("backward: cache does not match config");

    NetGrads grads = zero_grads(config);

    Tensor3 grad(dL_dscores.classes, dL_dscores.height, dL_dscores.width);
    for (int y = 0; y < dL_dscores.height; ++y)
        for (int x = 0; x < dL_dscores.width; ++x)
            for (int c = 0; c < dL_dscores.classes; ++c)
                grad.at(c, y, x) = dL_dscores.at(y, x, c);

    int conv_idx = static_cast<int>(grads.convs.size());
    int drop_idx = static_cast<int>(cache.dropout_keep.size());
    for (int i = static_cast<int>(config.layers.size()) - 1; i >= 0; --i) {
        const auto& l = config.layers[i];
        const Tensor3& x = cache.inputs[i];
        switch (l.kind) {
            case LayerKind::Conv: {
                --conv_idx;
                Tensor3 dx;
                conv_backward(x, l, params.convs[conv_idx], grad,
                              i > 0 ? &dx : nullptr, &grads.convs[conv_idx]);
                if (i > 0) grad = std::move(dx);
                break;
            }
            case LayerKind::Relu:
                grad = relu_backward(x, grad);
                break;
            case LayerKind::Dropout: {
                --drop_idx;
                grad = dropout_backward(cache.dropout_rate[drop_idx],
                                        cache.dropout_keep[drop_idx], grad);
                break;
            }
        }
    }
    return grads;
}

}  // namespace sec
