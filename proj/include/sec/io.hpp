#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sec/cues.hpp"
#include "sec/densecrf.hpp"
#include "sec/field.hpp"
#include "sec/losses.hpp"
#include "sec/network.hpp"
#include "sec/pooling.hpp"

namespace sec {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ".sect" binary tensor container: magic "SECT", version u32=1, dtype u8
// (0 = float32), ndim u8, dims u32 each, payload little-endian row-major
// float32.
struct TensorData {
    std::vector<uint32_t> dims;
    std::vector<float> values;

    size_t element_count() const {
        size_t n = 1;
        for (uint32_t d : dims) n *= d;
        return n;
    }
};

void write_sect(const std::filesystem::path& path, const TensorData& tensor);
TensorData read_sect(const std::filesystem::path& path);

// Scalar maps round-trip through 2-d tensors, fields through h x w x k.
TensorData to_tensor(const ScalarMap& m);
ScalarMap scalar_map_from_tensor(const TensorData& t);
TensorData to_tensor(const Field& f);
Field field_from_tensor(const TensorData& t);

// 8-bit binary PPM (P6) / PGM (P5).
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const SegMask& mask);
SegMask read_pgm(const std::filesystem::path& path);
void write_cue_pgm(const std::filesystem::path& path, const CueMask& cues);
CueMask read_cue_pgm(const std::filesystem::path& path);

enum class PoolingMode { Gmp, Gap, Gwrp };

PoolingMode pooling_mode_from_string(const std::string& s);
std::string to_string(PoolingMode m);

struct SynthConfig {
    int image_size = 32;
    int min_shapes = 1;
    int max_shapes = 3;
    double color_jitter = 0.05;
    double noise_amplitude = 0.04;
    double heatmap_sigma = 3.0;
    uint64_t rng_seed = 1;
};

struct TrainConfig {
    int iterations = 1500;
    int batch_size = 8;
    double lr0 = 0.01;
    double lr_drop_factor = 0.1;
    int lr_drop_every = 600;
    double weight_decay = 5e-4;
    double momentum = 0.9;
    uint64_t rng_seed = 1;
    TermMask terms;
    PoolingMode pooling = PoolingMode::Gwrp;
    DecayParams decay;
    CrfConfig crf;
};

// Everything a run needs, parsed from a JSON document with presets "toy"
// and "paper-schedule". Unknown keys are rejected.
struct RunConfig {
    std::string preset = "toy";
    NetConfig net;
    TrainConfig train;
    SynthConfig synth;
    CrfConfig infer_crf;  // test-time CRF (spatial_scale 1)

    static RunConfig toy();
    static RunConfig paper_schedule();
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// Checkpoint directory: manifest.json plus one .sect file per tensor.
void save_checkpoint(const std::filesystem::path& dir, const NetConfig& config,
                     const NetParams& params);
std::pair<NetConfig, NetParams> load_checkpoint(const std::filesystem::path& dir);

}  // namespace sec
