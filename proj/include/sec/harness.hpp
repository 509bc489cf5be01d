#pragma once

#include <filesystem>

#include "sec/datagen.hpp"
#include "sec/eval.hpp"
#include "sec/trainer.hpp"

namespace sec {

// Cue generation for a whole dataset: heatmaps and saliency are resampled
// to the cue resolution (image size / stride), then the supplementary
// rules are applied.
CueMask make_cue_mask(const SynthSample& sample, int stride, double fg_ratio,
                      double bg_fraction, int median_window = 3);

// Loads (image, labels, cues) triples; cue masks are read from cues_dir as
// NNNN.pgm. Ground-truth masks never enter the result.
std::vector<TrainSample> load_train_samples(const std::filesystem::path& data_dir,
                                            const std::filesystem::path& cues_dir);

// Test-time inference: forward in eval mode, softmax, bilinear upscale to
// image resolution, optional dense-CRF refinement, argmax.
SegMask infer_mask(const NetConfig& net_config, const NetParams& params, const Image& image,
                   const CrfConfig& infer_crf, bool use_crf);

struct ModelEval {
    EvalReport report;
};

// Runs inference on every sample of a dataset directory and pools counts.
EvalReport evaluate_model(const NetConfig& net_config, const NetParams& params,
                          const std::filesystem::path& test_dir, const CrfConfig& infer_crf,
                          bool use_crf);

struct VariantResult {
    std::string name;
    double miou = 0.0;
    double fg_fraction = 0.0;
    TrainLog log;
};

struct AblationReport {
    std::vector<VariantResult> variants;  // expand, seed, seed+expand, seed+constrain, full
};

struct PoolingReport {
    std::vector<VariantResult> variants;  // gmp, gap, gwrp
    double gt_fg_fraction = 0.0;
};

// Trains the five loss-term combinations with identical seeds and
// evaluates each on the test set.
AblationReport run_ablation(const std::filesystem::path& data_dir,
                            const std::filesystem::path& cues_dir,
                            const std::filesystem::path& test_dir, const RunConfig& config);

// Trains the three pooling variants for present classes (absent classes
// always GMP) with identical seeds and reports fg fractions and mIoU.
PoolingReport run_pooling_compare(const std::filesystem::path& data_dir,
                                  const std::filesystem::path& cues_dir,
                                  const std::filesystem::path& test_dir,
                                  const RunConfig& config);

double dataset_gt_fg_fraction(const std::filesystem::path& data_dir);

}  // namespace sec
