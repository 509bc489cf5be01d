#include "sec/losses.hpp"

#include <cmath>

namespace sec {

LossValue seeding_loss(const ProbField& f, const CueMask& cues) {
    if (cues.height != f.height || cues.width != f.width)
        throw FieldError("seeding_loss: cue mask dimensions differ from field");

    LossValue out;
    out.grad = GradField(f.height, f.width, f.classes);

    const int n = f.locations();
    int count = 0;
    for (int u = 0; u < n; ++u) {
        int c = cues.data[u];
        if (c == kUnlabeled) continue;
        if (c < 0 || c >= f.classes) throw FieldError("seeding_loss: cue class out of range");
        ++count;
    }
    if (count == 0) return out;  // no cues: zero loss, zero gradient

    for (int u = 0; u < n; ++u) {
        int c = cues.data[u];
        if (c == kUnlabeled) continue;
        out.loss -= std::log(f.at(u, c));
        out.grad.at(u, c) = -1.0 / (count * f.at(u, c));
    }
    out.loss /= count;
    return out;
}

LossValue expansion_loss(const ProbField& f, const LabelSet& labels,
                         const DecayParams& decay) {
    const int k = f.classes;
    for (int c : labels.present)
        if (c < 1 || c >= k) throw FieldError("expansion_loss: label out of range");

    LossValue out;
    out.grad = GradField(f.height, f.width, f.classes);

    auto add_term = [&](int cls, double d, bool present_sign, double norm) {
        auto [score, order] = gwrp_forward(f, cls, d);
        double dL_dscore;
        if (present_sign) {
            out.loss -= std::log(score) / norm;
            dL_dscore = -1.0 / (norm * score);
        } else {
            out.loss -= std::log(1.0 - score) / norm;
            dL_dscore = 1.0 / (norm * (1.0 - score));
        }
        GradField g = gwrp_backward(order, d, dL_dscore);
        for (size_t i = 0; i < out.grad.data.size(); ++i) out.grad.data[i] += g.data[i];
    };

    const int num_fg = k - 1;
    const int num_absent = num_fg - static_cast<int>(labels.size());
    for (int c = 1; c < k; ++c) {
        if (labels.contains(c))
            add_term(c, decay.d_plus, true, static_cast<double>(labels.size()));
        else if (num_absent > 0)
            add_term(c, decay.d_minus, false, static_cast<double>(num_absent));
    }
    add_term(0, decay.d_bg, true, 1.0);
    return out;
}

namespace {

LossValue constrain_from_q(const ProbField& q, const ProbField& f) {
    LossValue out;
    out.grad = GradField(f.height, f.width, f.classes);
    const int n = f.locations();
    for (size_t i = 0; i < f.data.size(); ++i) {
        double qv = q.data[i];
        double fv = f.data[i];
        if (qv > 0.0) out.loss += qv * std::log(qv / fv);
        out.grad.data[i] = -qv / (n * fv);  // fixed-Q convention
    }
    out.loss /= n;
    return out;
}

}  // namespace

LossValue constrain_loss(const Image& image, const ProbField& f, const CrfConfig& config) {
    return constrain_from_q(mean_field(image, f, config), f);
}

LossValue constrain_loss_with_kernel(const PairwiseKernel& kernel, const ProbField& f,
                                     const CrfConfig& config) {
    return constrain_from_q(mean_field_with_kernel(kernel, f, config), f);
}

LossReport sec_loss(const Image& image, const ProbField& f, const LabelSet& labels,
                    const CueMask& cues, const DecayParams& decay,
                    const CrfConfig& crf_config, const TermMask& terms,
                    const PairwiseKernel* cached_kernel) {
    LossReport report;
    report.terms = terms;
    report.grad_probs = GradField(f.height, f.width, f.classes);

    auto accumulate = [&](const LossValue& v) {
        for (size_t i = 0; i < v.grad.data.size(); ++i)
            report.grad_probs.data[i] += v.grad.data[i];
    };

    if (terms.seed) {
        LossValue v = seeding_loss(f, cues);
        report.seed_loss = v.loss;
        accumulate(v);
    }
    if (terms.expand) {
        LossValue v = expansion_loss(f, labels, decay);
        report.expand_loss = v.loss;
        accumulate(v);
    }
    if (terms.constrain) {
        LossValue v = cached_kernel
                          ? constrain_loss_with_kernel(*cached_kernel, f, crf_config)
                          : constrain_loss(image, f, crf_config);
        report.constrain_loss = v.loss;
        accumulate(v);
    }
    report.total = report.seed_loss + report.expand_loss + report.constrain_loss;
    return report;
}

}  // namespace sec
