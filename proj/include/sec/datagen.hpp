#pragma once

#include <filesystem>
#include <map>

#include "sec/cues.hpp"
#include "sec/field.hpp"
#include "sec/io.hpp"

namespace sec {

// One synthetic sample: image of colored shapes on a noisy gray
// background, image-level labels, a ground-truth mask (evaluation only),
// and simulated weak-localization inputs. Heatmaps are centroid-peaked
// Gaussian bumps, saliency is the color distance to the mean background
// color.
struct SynthSample {
    Image image;
    LabelSet labels;
    SegMask gt_mask;
    std::map<int, Heatmap> heatmaps;  // one per present class
    SaliencyMap saliency;
};

struct GenerateStats {
    int regenerated = 0;  // samples that needed a fresh placement attempt
};

// Deterministic given (config, count); sample i depends only on
// (config.rng_seed, i). Shapes keep at least 30% of their area visible
// under occlusion.
std::vector<SynthSample> generate(const SynthConfig& config, int count,
                                  GenerateStats* stats = nullptr);

// Writes manifest.json, images/NNNN.ppm, masks/NNNN.pgm,
// heat/NNNN_c<ID>.sect and sal/NNNN.sect under the directory.
void export_samples(const std::vector<SynthSample>& samples,
                    const std::filesystem::path& directory);

struct DatasetEntry {
    int id = 0;
    std::filesystem::path image_path;
    std::filesystem::path mask_path;
    LabelSet labels;
    std::map<int, std::filesystem::path> heatmap_paths;
    std::filesystem::path saliency_path;
};

struct DatasetManifest {
    int classes = 4;
    int image_size = 32;
    std::vector<DatasetEntry> entries;
};

DatasetManifest read_manifest(const std::filesystem::path& directory);
SynthSample load_sample(const DatasetEntry& entry);

}  // namespace sec
