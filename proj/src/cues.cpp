#include "sec/cues.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sec {

std::vector<int> fg_cues(const Heatmap& heatmap, double threshold_ratio) {
    if (threshold_ratio <= 0.0 || threshold_ratio >= 1.0)
        throw FieldError("fg_cues: threshold ratio must be in (0,1)");
    double mx = 0.0;
    for (double v : heatmap.data) {
        if (!std::isfinite(v) || v < 0.0) throw FieldError("fg_cues: negative heatmap entries");
        mx = std::max(mx, v);
    }
    std::vector<int> out;
    if (mx == 0.0) return out;
    const double thresh = threshold_ratio * mx;
    for (int u = 0; u < heatmap.locations(); ++u)
        if (heatmap.data[u] >= thresh) out.push_back(u);
    return out;
}

ScalarMap median_filter(const ScalarMap& m, int window) {
    if (window < 1 || window % 2 == 0) throw FieldError("median_filter: window must be odd");
    const int r = window / 2;
    ScalarMap out(m.height, m.width);
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(window) * window);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            vals.clear();
            for (int dy = -r; dy <= r; ++dy) {
                int sy = std::clamp(y + dy, 0, m.height - 1);
                for (int dx = -r; dx <= r; ++dx)
                    vals.push_back(m.at(sy, std::clamp(x + dx, 0, m.width - 1)));
            }
            auto mid = vals.begin() + vals.size() / 2;
            std::nth_element(vals.begin(), mid, vals.end());
            out.at(y, x) = *mid;
        }
    }
    return out;
}

ScalarMap resize_scalar(const ScalarMap& m, int new_h, int new_w) {
    if (new_h < 1 || new_w < 1) throw FieldError("resize_scalar: zero target dims");
    auto src = [](int dst, int dst_len, int src_len) {
        if (dst_len == 1) return 0.5 * (src_len - 1);
        return static_cast<double>(dst) * (src_len - 1) / (dst_len - 1);
    };
    ScalarMap out(new_h, new_w);
    for (int y = 0; y < new_h; ++y) {
        double fy = src(y, new_h, m.height);
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, m.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            double fx = src(x, new_w, m.width);
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, m.width - 1);
            double wx = fx - x0;
            out.at(y, x) = (1 - wy) * ((1 - wx) * m.at(y0, x0) + wx * m.at(y0, x1)) +
                           wy * ((1 - wx) * m.at(y1, x0) + wx * m.at(y1, x1));
        }
    }
    return out;
}

BgCues bg_cues(const SaliencyMap& saliency, double fraction, int median_window) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw FieldError("bg_cues: fraction must be in (0,1)");
    for (double v : saliency.data)
        if (!std::isfinite(v)) throw FieldError("bg_cues: non-finite saliency");

    const int n = saliency.locations();
    const int count = static_cast<int>(std::floor(fraction * n));

    BgCues res;
    if (count < 1) {
        res.empty_warning = true;
        return res;
    }

    ScalarMap filtered = median_filter(saliency, median_window);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return filtered.data[a] < filtered.data[b]; });
    res.locations.assign(idx.begin(), idx.begin() + count);
    std::sort(res.locations.begin(), res.locations.end());
    return res;
}

CueMask combine_cues(const std::map<int, std::vector<int>>& fg_by_class,
                     const std::vector<int>& bg, int height, int width) {
    CueMask mask(height, width);
    const int n = mask.locations();

    // Stack larger cue sets first so smaller ones (higher priority)
    // overwrite them; equal sizes resolve to the smaller class id.
    std::vector<std::pair<int, int>> order;  // (class, set size)
    for (const auto& [cls, locs] : fg_by_class) {
        if (cls == 0) throw FieldError("combine_cues: background given as foreground");
        for (int u : locs)
            if (u < 0 || u >= n) throw FieldError("combine_cues: location out of bounds");
        order.emplace_back(cls, static_cast<int>(locs.size()));
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first > b.first;
    });

    for (const auto& [cls, size] : order)
        for (int u : fg_by_class.at(cls)) mask.data[u] = cls;

    for (int u : bg) {
        if (u < 0 || u >= n) throw FieldError("combine_cues: location out of bounds");
        if (mask.data[u] == kUnlabeled) mask.data[u] = 0;
    }
    return mask;
}

}  // namespace sec
