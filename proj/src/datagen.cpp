#include "sec/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

namespace sec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ShapeSpec {
    int cls = 0;
    std::vector<uint8_t> mask;  // size n, 1 where the shape covers the pixel
    int area = 0;
};

constexpr double kPalette[4][3] = {
    {0.50, 0.50, 0.50},  // background gray
    {0.80, 0.25, 0.25},  // class 1: square, reddish
    {0.25, 0.80, 0.25},  // class 2: circle, greenish
    {0.25, 0.25, 0.80},  // class 3: triangle, bluish
};

ShapeSpec rasterize(int cls, int size, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double scale = size / 32.0;
    ShapeSpec shape;
    shape.cls = cls;
    shape.mask.assign(static_cast<size_t>(size) * size, 0);

    const double half = (4.0 + 3.5 * unit(rng)) * scale;  // half-extent in pixels
    const double cx = half + unit(rng) * (size - 1 - 2 * half);
    const double cy = half + unit(rng) * (size - 1 - 2 * half);

    auto covers = [&](double y, double x) {
        switch (cls) {
            case 1:  // axis-aligned square
                return std::abs(y - cy) <= half && std::abs(x - cx) <= half;
            case 2:  // circle
                return (y - cy) * (y - cy) + (x - cx) * (x - cx) <= half * half;
            case 3: {  // upward triangle inscribed in the half-extent box
                double ry = (y - cy + half) / (2.0 * half);  // 0 at apex row
                if (ry < 0.0 || ry > 1.0) return false;
                return std::abs(x - cx) <= ry * half;
            }
            default:
                return false;
        }
    };

    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if (covers(y, x)) {
                shape.mask[static_cast<size_t>(y) * size + x] = 1;
                ++shape.area;
            }
    return shape;
}

SynthSample make_sample(const SynthConfig& config, uint64_t index) {
    // Index-keyed seeding keeps each sample independent of its neighbors.
    std::mt19937_64 rng(config.rng_seed * 0x9E3779B97F4A7C15ULL + index + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int size = config.image_size;
    const int n = size * size;

    std::vector<ShapeSpec> shapes;
    SegMask gt(size, size, 0);
    for (int attempt = 0;; ++attempt) {
        std::uniform_int_distribution<int> count_dist(config.min_shapes, config.max_shapes);
        const int m = count_dist(rng);
        std::vector<int> classes = {1, 2, 3};
        std::shuffle(classes.begin(), classes.end(), rng);
        classes.resize(m);
        std::sort(classes.begin(), classes.end());

        shapes.clear();
        for (int c : classes) shapes.push_back(rasterize(c, size, rng));

        gt = SegMask(size, size, 0);
        for (const auto& s : shapes)
            for (int u = 0; u < n; ++u)
                if (s.mask[u]) gt.data[u] = s.cls;

        bool ok = true;
        for (const auto& s : shapes) {
            int visible = 0;
            for (int u = 0; u < n; ++u)
                if (s.mask[u] && gt.data[u] == s.cls) ++visible;
            if (visible < std::max(1, static_cast<int>(0.3 * s.area))) {
                ok = false;
                break;
            }
        }
        if (ok) break;
        if (attempt >= 50) throw FieldError("datagen: unsatisfiable shape placement");
    }

    SynthSample sample;
    sample.gt_mask = gt;

    // Render: flat palette colors with per-shape jitter, gray background,
    // shared per-pixel noise.
    std::vector<std::array<double, 3>> color(4);
    for (int c = 0; c < 4; ++c)
        for (int ch = 0; ch < 3; ++ch) color[c][ch] = kPalette[c][ch];
    for (const auto& s : shapes)
        for (int ch = 0; ch < 3; ++ch)
            color[s.cls][ch] += config.color_jitter * (2.0 * unit(rng) - 1.0);

    sample.image = Image(size, size);
    for (int u = 0; u < n; ++u) {
        const double noise = config.noise_amplitude * (2.0 * unit(rng) - 1.0);
        for (int ch = 0; ch < 3; ++ch)
            sample.image.data[static_cast<size_t>(u) * 3 + ch] =
                std::clamp(color[gt.data[u]][ch] + noise, 0.0, 1.0);
    }

    for (const auto& s : shapes) sample.labels.present.insert(s.cls);

    // Heatmaps: Gaussian bump at the visible centroid of each shape,
    // mimicking discriminative-part localization.
    for (const auto& s : shapes) {
        double cy = 0.0, cx = 0.0;
        int visible = 0;
        for (int u = 0; u < n; ++u)
            if (s.mask[u] && gt.data[u] == s.cls) {
                cy += u / size;
                cx += u % size;
                ++visible;
            }
        cy /= visible;
        cx /= visible;
        Heatmap h(size, size);
        const double inv2s = 1.0 / (2.0 * config.heatmap_sigma * config.heatmap_sigma);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                h.at(y, x) = std::exp(-((y - cy) * (y - cy) + (x - cx) * (x - cx)) * inv2s);
        sample.heatmaps[s.cls] = std::move(h);
    }

    // Saliency: color distance to the mean background color.
    std::array<double, 3> bg_mean = {0, 0, 0};
    int bg_count = 0;
    for (int u = 0; u < n; ++u)
        if (gt.data[u] == 0) {
            for (int ch = 0; ch < 3; ++ch)
                bg_mean[ch] += sample.image.data[static_cast<size_t>(u) * 3 + ch];
            ++bg_count;
        }
    if (bg_count > 0)
        for (int ch = 0; ch < 3; ++ch) bg_mean[ch] /= bg_count;

    sample.saliency = SaliencyMap(size, size);
    for (int u = 0; u < n; ++u) {
        double d2 = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
            double d = sample.image.data[static_cast<size_t>(u) * 3 + ch] - bg_mean[ch];
            d2 += d * d;
        }
        sample.saliency.data[u] = std::sqrt(d2);
    }
    return sample;
}

}  // namespace

std::vector<SynthSample> generate(const SynthConfig& config, int count, GenerateStats* stats) {
    if (count < 1) throw FieldError("generate: count must be >= 1");
    std::vector<SynthSample> samples;
    samples.reserve(count);
    uint64_t index = 0;
    for (int i = 0; i < count; ++i) {
        for (;;) {
            try {
                samples.push_back(make_sample(config, index++));
                break;
            } catch (const FieldError&) {
                if (stats) ++stats->regenerated;  // skip and draw a fresh sample
            }
        }
    }
    return samples;
}

namespace {

std::string pad_id(int id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", id);
    return buf;
}

}  // namespace

void export_samples(const std::vector<SynthSample>& samples, const fs::path& directory) {
    fs::create_directories(directory / "images");
    fs::create_directories(directory / "masks");
    fs::create_directories(directory / "heat");
    fs::create_directories(directory / "sal");

    json manifest;
    manifest["classes"] = 4;
    manifest["image_size"] = samples.empty() ? 0 : samples.front().image.height;
    manifest["count"] = samples.size();
    json entries = json::array();

    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const std::string id = pad_id(static_cast<int>(i));
        json e;
        e["id"] = i;
        e["image"] = "images/" + id + ".ppm";
        e["mask"] = "masks/" + id + ".pgm";
        e["labels"] = json::array();
        for (int c : s.labels.present) e["labels"].push_back(c);
        json heat = json::object();
        for (const auto& [cls, hm] : s.heatmaps) {
            std::string rel = "heat/" + id + "_c" + std::to_string(cls) + ".sect";
            heat[std::to_string(cls)] = rel;
            write_sect(directory / rel, to_tensor(hm));
        }
        e["heatmaps"] = heat;
        e["saliency"] = "sal/" + id + ".sect";

        write_ppm(directory / e["image"].get<std::string>(), s.image);
        write_pgm(directory / e["mask"].get<std::string>(), s.gt_mask);
        write_sect(directory / e["saliency"].get<std::string>(), to_tensor(s.saliency));
        entries.push_back(std::move(e));
    }
    manifest["samples"] = entries;

    std::ofstream os(directory / "manifest.json");
    if (!os) throw IoError("cannot write manifest in " + directory.string());
    os << manifest.dump(2) << "\n";
}

DatasetManifest read_manifest(const fs::path& directory) {
    std::ifstream is(directory / "manifest.json");
    if (!is) throw IoError("missing manifest: " + (directory / "manifest.json").string());
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw IoError("manifest parse error in " + (directory / "manifest.json").string() +
                      ": " + e.what());
    }

    DatasetManifest m;
    m.classes = doc.at("classes").get<int>();
    m.image_size = doc.at("image_size").get<int>();
    for (const auto& e : doc.at("samples")) {
        DatasetEntry entry;
        entry.id = e.at("id").get<int>();
        entry.image_path = directory / e.at("image").get<std::string>();
        entry.mask_path = directory / e.at("mask").get<std::string>();
        for (const auto& c : e.at("labels")) entry.labels.present.insert(c.get<int>());
        for (const auto& [key, rel] : e.at("heatmaps").items())
            entry.heatmap_paths[std::stoi(key)] = directory / rel.get<std::string>();
        entry.saliency_path = directory / e.at("saliency").get<std::string>();
        m.entries.push_back(std::move(entry));
    }
    return m;
}

SynthSample load_sample(const DatasetEntry& entry) {
    SynthSample s;
    s.image = read_ppm(entry.image_path);
    s.gt_mask = read_pgm(entry.mask_path);
    s.labels = entry.labels;
    for (const auto& [cls, path] : entry.heatmap_paths)
        s.heatmaps[cls] = scalar_map_from_tensor(read_sect(path));
    s.saliency = scalar_map_from_tensor(read_sect(entry.saliency_path));
    return s;
}

}  // namespace sec
