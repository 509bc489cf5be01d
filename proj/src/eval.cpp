#include "sec/eval.hpp"

namespace sec {

ConfusionCounts evaluate(const SegMask& pred, const SegMask& gt, int classes) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw FieldError("evaluate: mask dimensions differ");
    ConfusionCounts c(classes);
    for (size_t i = 0; i < pred.data.size(); ++i) {
        int p = pred.data[i], g = gt.data[i];
        if (p < 0 || p >= classes || g < 0 || g >= classes)
            throw FieldError("evaluate: class id out of range");
        ++c.at(g, p);
    }
    return c;
}

EvalReport aggregate(const std::vector<ConfusionCounts>& counts) {
    if (counts.empty()) throw FieldError("aggregate: no counts");
    const int k = counts.front().classes;
    ConfusionCounts total(k);
    for (const auto& c : counts) {
        if (c.classes != k) throw FieldError("aggregate: class count mismatch");
        for (size_t i = 0; i < total.counts.size(); ++i) total.counts[i] += c.counts[i];
    }

    EvalReport report;
    report.classes = k;
    report.confusion = total;
    report.iou.assign(k, 0.0);
    report.defined.assign(k, false);

    int64_t fg = 0, all = 0;
    double sum = 0.0;
    int defined = 0;
    for (int c = 0; c < k; ++c) {
        int64_t tp = total.at(c, c);
        int64_t fp = 0, fn = 0;
        for (int o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += total.at(o, c);
            fn += total.at(c, o);
        }
        int64_t denom = tp + fp + fn;
        if (denom > 0) {
            report.iou[c] = static_cast<double>(tp) / denom;
            report.defined[c] = true;
            sum += report.iou[c];
            ++defined;
        }
    }
    for (int g = 0; g < k; ++g) {
        for (int p = 0; p < k; ++p) {
            all += total.at(g, p);
            if (p != 0) fg += total.at(g, p);
        }
    }
    report.miou = defined > 0 ? sum / defined : 0.0;
    report.fg_fraction = all > 0 ? static_cast<double>(fg) / all : 0.0;
    return report;
}

}  // namespace sec
