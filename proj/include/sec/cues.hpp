#pragma once

#include <map>
#include <vector>

#include "sec/field.hpp"

namespace sec {

// Single-channel spatial map, shared by heatmaps and saliency maps.
struct ScalarMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    ScalarMap() = default;
    ScalarMap(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    int locations() const { return height * width; }
};

using Heatmap = ScalarMap;
using SaliencyMap = ScalarMap;

// Sparse partial labeling: class id per location, kUnlabeled elsewhere.
struct CueMask {
    int height = 0;
    int width = 0;
    std::vector<int> data;

    CueMask() = default;
    CueMask(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w, kUnlabeled) {}

    int& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    int at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    int locations() const { return height * width; }
};

// Locations whose heatmap value reaches threshold_ratio times the map
// maximum. An all-zero map yields no cues.
std::vector<int> fg_cues(const Heatmap& heatmap, double threshold_ratio = 0.2);

struct BgCues {
    std::vector<int> locations;
    bool empty_warning = false;  // fraction * n rounded down to zero
};

// Median-filters the saliency map (edge-replicated borders) and returns the
// floor(fraction * n) least salient locations, ties broken by ascending
// location index.
BgCues bg_cues(const SaliencyMap& saliency, double fraction = 0.1, int median_window = 3);

// Replicated-border square median filter; exposed for oracle tests.
ScalarMap median_filter(const ScalarMap& m, int window);

// Corner-anchored bilinear resampling of a scalar map.
ScalarMap resize_scalar(const ScalarMap& m, int new_h, int new_w);

// Stacks per-class foreground cues and background cues into one mask.
// Conflicting foreground classes are resolved in favor of the class with
// the smaller cue set (smaller class id on equal sizes); background never
// overrides foreground.
CueMask combine_cues(const std::map<int, std::vector<int>>& fg_by_class,
                     const std::vector<int>& bg, int height, int width);

}  // namespace sec
