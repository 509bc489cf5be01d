#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sec/field.hpp"

namespace sec {

// Channel-major activation tensor used inside the network.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w),
          data(static_cast<size_t>(c) * h * w, fill) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
};

enum class LayerKind { Conv, Relu, Dropout };

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    // Conv parameters.
    int ksize = 3;
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    int pad = 1;
    int dilation = 1;
    // Dropout rate.
    double rate = 0.5;

    static LayerSpec conv(int ksize, int in_ch, int out_ch, int stride = 1, int pad = 0,
                          int dilation = 1) {
        LayerSpec s;
        s.kind = LayerKind::Conv;
        s.ksize = ksize;
        s.in_channels = in_ch;
        s.out_channels = out_ch;
        s.stride = stride;
        s.pad = pad;
        s.dilation = dilation;
        return s;
    }
    static LayerSpec relu() {
        LayerSpec s;
        s.kind = LayerKind::Relu;
        return s;
    }
    static LayerSpec dropout(double rate) {
        LayerSpec s;
        s.kind = LayerKind::Dropout;
        s.rate = rate;
        return s;
    }
};

struct NetConfig {
    std::vector<LayerSpec> layers;
    int output_stride = 2;
    int classes = 4;

    // conv3x3(16, stride 2) -> relu -> conv3x3(32, dilation 2) -> relu
    // -> dropout -> conv1x1(k); output stride 2.
    static NetConfig toy(int classes, double dropout_rate = 0.5);

    void validate() const;
};

// Weights for one conv layer: w indexed [out][in][ky][kx], b indexed [out].
struct ConvParams {
    std::vector<double> w;
    std::vector<double> b;
};

struct NetParams {
    std::vector<ConvParams> convs;  // one entry per conv layer, in order
};

struct NetGrads {
    std::vector<ConvParams> convs;  // same shapes as NetParams
};

// Activations recorded by forward for use in backward.
struct ForwardCache {
    std::vector<Tensor3> inputs;          // input to each layer
    std::vector<std::vector<uint8_t>> dropout_keep;  // per dropout layer, 1 = kept
    std::vector<double> dropout_rate;     // effective rate used (0 in eval mode)
};

// Prediction layer ~ N(0, std 0.1); hidden conv layers ~ N(0, sqrt(2/fan_in));
// biases zero. Deterministic given the seed.
NetParams init_params(const NetConfig& config, uint64_t rng_seed);

ScoreField forward(const NetConfig& config, const NetParams& params, const Image& image,
                   bool train_mode, std::mt19937_64& rng, ForwardCache* cache = nullptr);

// Reverse-mode gradients for all parameters given dL/dscores.
NetGrads backward(const NetConfig& config, const NetParams& params,
                  const ForwardCache& cache, const GradField& dL_dscores);

// Individual layer primitives, exposed for gradient checking.
Tensor3 conv_forward(const Tensor3& x, const LayerSpec& spec, const ConvParams& p);
void conv_backward(const Tensor3& x, const LayerSpec& spec, const ConvParams& p,
                   const Tensor3& dy, Tensor3* dx, ConvParams* dp);
Tensor3 relu_forward(const Tensor3& x);
Tensor3 relu_backward(const Tensor3& x, const Tensor3& dy);
Tensor3 dropout_forward(const Tensor3& x, double rate, const std::vector<uint8_t>& keep);
Tensor3 dropout_backward(double rate, const std::vector<uint8_t>& keep, const Tensor3& dy);

Tensor3 image_to_tensor(const Image& image);

NetGrads zero_grads(const NetConfig& config);

}  // namespace sec
