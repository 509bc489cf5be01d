#pragma once

#include "sec/cues.hpp"
#include "sec/io.hpp"
#include "sec/losses.hpp"
#include "sec/network.hpp"

namespace sec {

// What the trainer is allowed to see: image, per-image labels and the
// precomputed cue mask. Ground truth never enters here.
struct TrainSample {
    Image image;
    LabelSet labels;
    CueMask cues;
};

struct TrainRecord {
    int iteration = 0;
    double lr = 0.0;
    double seed_loss = 0.0;
    double expand_loss = 0.0;
    double constrain_loss = 0.0;
    double total = 0.0;
};

struct TrainLog {
    std::vector<TrainRecord> records;
};

// Thrown when a loss or gradient goes non-finite; carries the iteration.
class TrainAbort : public std::runtime_error {
public:
    TrainAbort(int iteration, const std::string& what)
        : std::runtime_error(what), iteration(iteration) {}
    int iteration;
};

// Step learning-rate schedule: lr0 * factor^floor(iteration / every).
double lr_at(const TrainConfig& config, int iteration);

// Effective decay parameters after applying the pooling mode for present
// classes (GMP -> d_plus 0, GAP -> d_plus 1; absent classes always GMP).
DecayParams effective_decay(const TrainConfig& config);

// Mini-batch momentum SGD over the composite loss. Epoch-wise shuffled
// sampling without replacement; weight decay added to the gradient;
// deterministic given the seed.
std::pair<NetParams, TrainLog> train(const std::vector<TrainSample>& dataset,
                                     const NetConfig& net_config,
                                     const TrainConfig& train_config);

}  // namespace sec
