#pragma once

#include <vector>

#include "sec/field.hpp"

namespace sec {

// Fully-connected pairwise CRF with two Gaussian kernels under Potts
// compatibility: an appearance kernel (spatial + color) and a smoothness
// kernel (spatial only). spatial_scale multiplies all pixel distances,
// matching the downscaled-image training setup (12 at training time).
struct CrfConfig {
    int iterations = 5;
    double appearance_weight = 10.0;     // w1
    double appearance_spatial_sigma = 80.0;  // theta_alpha, pixels
    double appearance_color_sigma = 13.0;    // theta_beta, on the [0,255] scale
    double smoothness_weight = 3.0;      // w2
    double smoothness_sigma = 3.0;       // theta_gamma, pixels
    double spatial_scale = 1.0;

    void validate() const;
};

// Precomputed symmetric pairwise kernel, upper-triangular packed (u < v).
// Depends only on the image and the config, so it can be cached across
// repeated mean-field runs on the same image.
struct PairwiseKernel {
    int n = 0;
    std::vector<float> values;  // n*(n-1)/2 entries

    float at(int u, int v) const {
        if (u > v) std::swap(u, v);
        return values[static_cast<size_t>(u) * (2 * n - u - 1) / 2 + (v - u - 1)];
    }
};

PairwiseKernel precompute_kernel(const Image& image, const CrfConfig& config);

// Jacobi-style mean-field inference: Q starts at the unary probabilities
// and each iteration applies Q_u <- softmax_c(log unary_{u,c} - sum_{c'!=c}
// m_{u,c'}) with messages m_{u,c} = sum_{v!=u} K(u,v) Q_{v,c}. Dense pairs,
// brute force.
ProbField mean_field(const Image& image, const ProbField& unary_probs,
                     const CrfConfig& config);
ProbField mean_field_with_kernel(const PairwiseKernel& kernel,
                                 const ProbField& unary_probs,
                                 const CrfConfig& config);

// Test-time refinement: mean field followed by argmax.
SegMask refine(const Image& image, const ProbField& mask_probs, const CrfConfig& config);

}  // namespace sec
