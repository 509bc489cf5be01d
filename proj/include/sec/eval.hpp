#pragma once

#include <cstdint>
#include <vector>

#include "sec/field.hpp"

namespace sec {

// Pixel counts for one image: confusion[gt * k + pred].
struct ConfusionCounts {
    int classes = 0;
    std::vector<int64_t> counts;

    ConfusionCounts() = default;
    explicit ConfusionCounts(int k)
        : classes(k), counts(static_cast<size_t>(k) * k, 0) {}

    int64_t& at(int gt, int pred) { return counts[static_cast<size_t>(gt) * classes + pred]; }
    int64_t at(int gt, int pred) const { return counts[static_cast<size_t>(gt) * classes + pred]; }
};

struct EvalReport {
    int classes = 0;
    std::vector<double> iou;       // per class; NaN-free, gated by defined[]
    std::vector<bool> defined;     // class seen in pred or gt anywhere
    double miou = 0.0;             // mean over defined classes
    double fg_fraction = 0.0;      // predicted non-background share
    ConfusionCounts confusion;
};

ConfusionCounts evaluate(const SegMask& pred, const SegMask& gt, int classes);

// Dataset-level pooling: IoU per class from summed counts, classes absent
// from both pred and gt excluded from the mean.
EvalReport aggregate(const std::vector<ConfusionCounts>& counts);

}  // namespace sec
