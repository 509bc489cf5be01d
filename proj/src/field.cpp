#include "sec/field.hpp"

#include <algorithm>
#include <cmath>

namespace sec {

namespace {

void check_field_basics(const Field& f, const char* what) {
    if (f.height < 1 || f.width < 1 || f.classes < 2)
        throw FieldError(std::string(what) + ": field must be at least 1x1 with 2 classes");
    if (f.data.size() != static_cast<size_t>(f.locations()) * f.classes)
        throw FieldError(std::string(what) + ": data size does not match dimensions");
}

}  // namespace

ProbField softmax(const ScoreField& scores) {
    check_field_basics(scores, "softmax");
    for (double v : scores.data)
        if (!std::isfinite(v)) throw FieldError("non-finite scores");

    const int k = scores.classes;
    // Affine floor: p = (1 - k*eps) * softmax + eps keeps every entry >= eps
    // while each location still sums to exactly 1.
    const double scale = 1.0 - k * kProbEps;

    ProbField out(scores.height, scores.width, k);
    const int n = scores.locations();
    for (int u = 0; u < n; ++u) {
        double mx = scores.at(u, 0);
        for (int c = 1; c < k; ++c) mx = std::max(mx, scores.at(u, c));
        double sum = 0.0;
        for (int c = 0; c < k; ++c) {
            double e = std::exp(scores.at(u, c) - mx);
            out.at(u, c) = e;
            sum += e;
        }
        for (int c = 0; c < k; ++c)
            out.at(u, c) = scale * (out.at(u, c) / sum) + kProbEps;
    }
    return out;
}

GradField softmax_backward(const ProbField& probs, const GradField& dL_dprobs) {
    check_field_basics(probs, "softmax_backward");
    if (!probs.same_shape(dL_dprobs))
        throw FieldError("softmax_backward: shape mismatch");

    const int k = probs.classes;
    const double scale = 1.0 - k * kProbEps;
    GradField out(probs.height, probs.width, k);
    const int n = probs.locations();
    std::vector<double> y(k);
    for (int u = 0; u < n; ++u) {
        // Recover the raw softmax output underneath the affine floor.
        for (int c = 0; c < k; ++c) y[c] = (probs.at(u, c) - kProbEps) / scale;
        double dot = 0.0;
        for (int c = 0; c < k; ++c) dot += dL_dprobs.at(u, c) * y[c];
        for (int c = 0; c < k; ++c)
            out.at(u, c) = scale * y[c] * (dL_dprobs.at(u, c) - dot);
    }
    return out;
}

bool is_valid_prob_field(const ProbField& f, double tol) {
    if (f.height < 1 || f.width < 1 || f.classes < 2) return false;
    const int n = f.locations();
    for (int u = 0; u < n; ++u) {
        double sum = 0.0;
        for (int c = 0; c < f.classes; ++c) {
            double v = f.at(u, c);
            if (!std::isfinite(v) || v < kProbEps || v > 1.0) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

namespace {

// Corner-anchored source coordinate for bilinear sampling.
double src_coord(int dst, int dst_len, int src_len) {
    if (dst_len == 1) return 0.5 * (src_len - 1);
    return static_cast<double>(dst) * (src_len - 1) / (dst_len - 1);
}

int nearest_src(int dst, int dst_len, int src_len) {
    double pos = (dst + 0.5) * static_cast<double>(src_len) / dst_len;
    int idx = static_cast<int>(pos);
    return std::min(idx, src_len - 1);
}

}  // namespace

Field resize_field(const Field& f, int new_h, int new_w, ResizeMode mode,
                   bool renormalize) {
    check_field_basics(f, "resize_field");
    if (new_h < 1 || new_w < 1) throw FieldError("resize_field: zero target dims");

    Field out(new_h, new_w, f.classes);
    if (mode == ResizeMode::Nearest) {
        for (int y = 0; y < new_h; ++y) {
            int sy = nearest_src(y, new_h, f.height);
            for (int x = 0; x < new_w; ++x) {
                int sx = nearest_src(x, new_w, f.width);
                for (int c = 0; c < f.classes; ++c)
                    out.at(y, x, c) = f.at(sy, sx, c);
            }
        }
        return out;
    }

    for (int y = 0; y < new_h; ++y) {
        double fy = src_coord(y, new_h, f.height);
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, f.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            double fx = src_coord(x, new_w, f.width);
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, f.width - 1);
            double wx = fx - x0;
            double sum = 0.0;
            for (int c = 0; c < f.classes; ++c) {
                double v = (1 - wy) * ((1 - wx) * f.at(y0, x0, c) + wx * f.at(y0, x1, c)) +
                           wy * ((1 - wx) * f.at(y1, x0, c) + wx * f.at(y1, x1, c));
                out.at(y, x, c) = v;
                sum += v;
            }
            if (renormalize && sum > 0.0)
                for (int c = 0; c < f.classes; ++c) out.at(y, x, c) /= sum;
        }
    }
    return out;
}

Image resize_image(const Image& img, int new_h, int new_w) {
    if (new_h < 1 || new_w < 1) throw FieldError("resize_image: zero target dims");
    Image out(new_h, new_w);
    for (int y = 0; y < new_h; ++y) {
        double fy = src_coord(y, new_h, img.height);
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, img.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            double fx = src_coord(x, new_w, img.width);
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, img.width - 1);
            double wx = fx - x0;
            for (int ch = 0; ch < 3; ++ch) {
                out.at(y, x, ch) =
                    (1 - wy) * ((1 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch)) +
                    wy * ((1 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch));
            }
        }
    }
    return out;
}

SegMask resize_mask(const SegMask& m, int new_h, int new_w) {
    if (new_h < 1 || new_w < 1) throw FieldError("resize_mask: zero target dims");
    SegMask out(new_h, new_w);
    for (int y = 0; y < new_h; ++y) {
        int sy = nearest_src(y, new_h, m.height);
        for (int x = 0; x < new_w; ++x)
            out.at(y, x) = m.at(sy, nearest_src(x, new_w, m.width));
    }
    return out;
}

SegMask argmax_mask(const Field& f) {
    SegMask out(f.height, f.width);
    const int n = f.locations();
    for (int u = 0; u < n; ++u) {
        int best = 0;
        for (int c = 1; c < f.classes; ++c)
            if (f.at(u, c) > f.at(u, best)) best = c;
        out.data[u] = best;
    }
    return out;
}

}  // namespace sec
