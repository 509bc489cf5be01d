#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sec {

// Probabilities are kept at least this far from zero so logarithms stay finite.
constexpr double kProbEps = 1e-8;

// Sentinel for locations a cue mask leaves unlabeled.
constexpr int kUnlabeled = 255;

// Dense per-location, per-class field. Locations are row-major, so the
// value for class c at location u lives at data[u * classes + c].
// Used for pre-softmax scores, probabilities and gradients alike.
struct Field {
    int height = 0;
    int width = 0;
    int classes = 0;
    std::vector<double> data;

    Field() = default;
    Field(int h, int w, int k, double fill = 0.0)
        : height(h), width(w), classes(k),
          data(static_cast<size_t>(h) * w * k, fill) {}

    int locations() const { return height * width; }

    double& at(int u, int c) { return data[static_cast<size_t>(u) * classes + c]; }
    double at(int u, int c) const { return data[static_cast<size_t>(u) * classes + c]; }
    double& at(int y, int x, int c) { return at(y * width + x, c); }
    double at(int y, int x, int c) const { return at(y * width + x, c); }

    bool same_shape(const Field& o) const {
        return height == o.height && width == o.width && classes == o.classes;
    }
};

using ScoreField = Field;
using ProbField = Field;
using GradField = Field;

// RGB image with values in [0, 1], channels interleaved per pixel.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;  // size height * width * 3

    Image() = default;
    Image(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w * 3, fill) {}

    double& at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * width + x) * 3 + ch]; }
    double at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * width + x) * 3 + ch]; }
};

// Per-location class ids.
struct SegMask {
    int height = 0;
    int width = 0;
    std::vector<int> data;

    SegMask() = default;
    SegMask(int h, int w, int fill = 0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    int& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    int at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
};

// Foreground classes annotated as present in an image. Never contains the
// background id 0.
struct LabelSet {
    std::set<int> present;

    bool contains(int c) const { return present.count(c) != 0; }
    bool empty() const { return present.empty(); }
    size_t size() const { return present.size(); }
};

// Thrown on contract violations of field operations.
class FieldError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ResizeMode { Nearest, Bilinear };

// Numerically stable softmax over classes at each location. Output entries
// are pulled at least kProbEps away from 0 while each location still sums
// to 1 exactly.
ProbField softmax(const ScoreField& scores);

// Chain rule through softmax (including the kProbEps floor applied in the
// forward pass): given dL/dprobs returns dL/dscores.
GradField softmax_backward(const ProbField& probs, const GradField& dL_dprobs);

// Checks the ProbField contract: finite, entries in [kProbEps, 1], each
// location normalized to 1 within tol.
bool is_valid_prob_field(const ProbField& f, double tol = 1e-9);

// Spatial resampling. Bilinear uses corner-anchored sample positions, so
// resizing to the same dimensions is the identity. For probability fields
// each output location is renormalized.
Field resize_field(const Field& f, int new_h, int new_w, ResizeMode mode,
                   bool renormalize = false);
Image resize_image(const Image& img, int new_h, int new_w);
SegMask resize_mask(const SegMask& m, int new_h, int new_w);

// Argmax over classes, smallest class id wins ties.
SegMask argmax_mask(const Field& f);

}  // namespace sec
