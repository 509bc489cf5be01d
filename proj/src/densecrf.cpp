#include "sec/densecrf.hpp"

#include <algorithm>
#include <cmath>

namespace sec {

void CrfConfig::validate() const {
    if (iterations < 0) throw FieldError("crf: iterations must be >= 0");
    if (appearance_weight < 0.0 || smoothness_weight < 0.0)
        throw FieldError("crf: kernel weights must be >= 0");
    if (appearance_spatial_sigma <= 0.0 || appearance_color_sigma <= 0.0 ||
        smoothness_sigma <= 0.0)
        throw FieldError("crf: sigmas must be > 0");
    if (spatial_scale <= 0.0) throw FieldError("crf: spatial scale must be > 0");
}

PairwiseKernel precompute_kernel(const Image& image, const CrfConfig& config) {
    config.validate();
    const int h = image.height, w = image.width;
    const int n = h * w;
    const double s2 = config.spatial_scale * config.spatial_scale;
    const double inv2a = s2 / (2.0 * config.appearance_spatial_sigma * config.appearance_spatial_sigma);
    const double inv2b = 1.0 / (2.0 * config.appearance_color_sigma * config.appearance_color_sigma);
    const double inv2g = s2 / (2.0 * config.smoothness_sigma * config.smoothness_sigma);

    PairwiseKernel kernel;
    kernel.n = n;
    kernel.values.resize(static_cast<size_t>(n) * (n - 1) / 2);

    size_t idx = 0;
    for (int u = 0; u < n; ++u) {
        const int uy = u / w, ux = u % w;
        // Color distances use the conventional [0,255] scale.
        const double ur = image.data[u * 3] * 255.0;
        const double ug = image.data[u * 3 + 1] * 255.0;
        const double ub = image.data[u * 3 + 2] * 255.0;
        for (int v = u + 1; v < n; ++v, ++idx) {
            const int vy = v / w, vx = v % w;
            const double dy = uy - vy, dx = ux - vx;
            const double sp = dy * dy + dx * dx;
            const double dr = ur - image.data[v * 3] * 255.0;
            const double dg = ug - image.data[v * 3 + 1] * 255.0;
            const double db = ub - image.data[v * 3 + 2] * 255.0;
            const double col = dr * dr + dg * dg + db * db;
            kernel.values[idx] = static_cast<float>(
                config.appearance_weight * std::exp(-sp * inv2a - col * inv2b) +
                config.smoothness_weight * std::exp(-sp * inv2g));
        }
    }
    return kernel;
}

ProbField mean_field_with_kernel(const PairwiseKernel& kernel,
                                 const ProbField& unary_probs,
                                 const CrfConfig& config) {
    config.validate();
    const int n = unary_probs.locations();
    const int k = unary_probs.classes;
    if (kernel.n != n) throw FieldError("crf: kernel/unary dimension mismatch");
    if (!is_valid_prob_field(unary_probs, 1e-6))
        throw FieldError("crf: unary is not a valid probability field");

    std::vector<double> log_unary(static_cast<size_t>(n) * k);
    for (size_t i = 0; i < log_unary.size(); ++i)
        log_unary[i] = std::log(unary_probs.data[i]);

    ProbField q = unary_probs;
    std::vector<double> msg(static_cast<size_t>(n) * k);

    for (int it = 0; it < config.iterations; ++it) {
        std::fill(msg.begin(), msg.end(), 0.0);
        // m_{u,c} = sum_{v != u} K(u,v) q_{v,c}; symmetric pairs visited once.
        size_t idx = 0;
        for (int u = 0; u < n; ++u) {
            const double* qu = &q.data[static_cast<size_t>(u) * k];
            double* mu = &msg[static_cast<size_t>(u) * k];
            for (int v = u + 1; v < n; ++v, ++idx) {
                const double kv = kernel.values[idx];
                if (kv == 0.0) continue;
                const double* qv = &q.data[static_cast<size_t>(v) * k];
                double* mv = &msg[static_cast<size_t>(v) * k];
                for (int c = 0; c < k; ++c) {
                    mu[c] += kv * qv[c];
                    mv[c] += kv * qu[c];
                }
            }
        }
        // Jacobi update: q written from a full pass over the old state.
        for (int u = 0; u < n; ++u) {
            const double* mu = &msg[static_cast<size_t>(u) * k];
            double total = 0.0;
            for (int c = 0; c < k; ++c) total += mu[c];
            double* qu = &q.data[static_cast<size_t>(u) * k];
            double mx = -1e300;
            for (int c = 0; c < k; ++c) {
                // Potts compatibility: penalty from all other classes' mass.
                qu[c] = log_unary[static_cast<size_t>(u) * k + c] - (total - mu[c]);
                mx = std::max(mx, qu[c]);
            }
            double sum = 0.0;
            for (int c = 0; c < k; ++c) {
                qu[c] = std::exp(qu[c] - mx);
                sum += qu[c];
            }
            for (int c = 0; c < k; ++c) qu[c] /= sum;
        }
    }
    return q;
}

ProbField mean_field(const Image& image, const ProbField& unary_probs,
                     const CrfConfig& config) {
    if (image.height != unary_probs.height || image.width != unary_probs.width)
        throw FieldError("crf: image and unary dimensions differ");
    if (config.iterations == 0) {
        config.validate();
        return unary_probs;
    }
    return mean_field_with_kernel(precompute_kernel(image, config), unary_probs, config);
}

SegMask refine(const Image& image, const ProbField& mask_probs, const CrfConfig& config) {
    return argmax_mask(mean_field(image, mask_probs, config));
}

}  // namespace sec
