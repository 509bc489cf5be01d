#pragma once

#include "sec/cues.hpp"
#include "sec/densecrf.hpp"
#include "sec/field.hpp"
#include "sec/pooling.hpp"

namespace sec {

// Selects which loss terms contribute; the ablation harness toggles these.
struct TermMask {
    bool seed = true;
    bool expand = true;
    bool constrain = true;
};

struct LossReport {
    double seed_loss = 0.0;
    double expand_loss = 0.0;
    double constrain_loss = 0.0;
    double total = 0.0;
    GradField grad_probs;
    TermMask terms;
};

struct LossValue {
    double loss = 0.0;
    GradField grad;
};

// Cross-entropy restricted to cue locations, jointly normalized by the
// total cue count (background cues included). Locations without cues
// contribute nothing to loss or gradient.
LossValue seeding_loss(const ProbField& f, const CueMask& cues);

// Image-level classification loss on pooled class scores: present
// foreground classes via GWRP(d_plus), absent ones via 1 - GWRP(d_minus),
// background via GWRP(d_bg). Empty class groups drop their term.
LossValue expansion_loss(const ProbField& f, const LabelSet& labels,
                         const DecayParams& decay);

// Mean KL divergence from the CRF marginals Q to the network output f,
// with Q treated as a constant in the backward pass. The image must
// already be downscaled to f's spatial dimensions. When a cached kernel
// for the image is available use the second overload.
LossValue constrain_loss(const Image& image, const ProbField& f, const CrfConfig& config);
LossValue constrain_loss_with_kernel(const PairwiseKernel& kernel, const ProbField& f,
                                     const CrfConfig& config);

// Composite loss: unweighted sum of the active terms.
LossReport sec_loss(const Image& image, const ProbField& f, const LabelSet& labels,
                    const CueMask& cues, const DecayParams& decay,
                    const CrfConfig& crf_config, const TermMask& terms,
                    const PairwiseKernel* cached_kernel = nullptr);

}  // namespace sec
