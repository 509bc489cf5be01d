#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "sec/io.hpp"

using namespace sec;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("sec-io-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("sect tensors round-trip exactly") {
    fs::path dir = temp_dir("sect");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<float> dist(-5.0f, 5.0f);
    TensorData t;
    t.dims = {3, 4, 2};
    t.values.resize(t.element_count());
    for (auto& v : t.values) v = dist(rng);

    write_sect(dir / "a.sect", t);
    TensorData back = read_sect(dir / "a.sect");
    CHECK(back.dims == t.dims);
    CHECK(back.values == t.values);
}

TEST_CASE("sect rejects corrupt files") {
    fs::path dir = temp_dir("sect-bad");
    TensorData t;
    t.dims = {2, 2};
    t.values = {1.0f, 2.0f, 3.0f, 4.0f};
    write_sect(dir / "good.sect", t);

    SUBCASE("bad magic") {
        std::ofstream os(dir / "bad.sect", std::ios::binary);
        os << "NOPE";
        os.close();
        CHECK_THROWS_AS(read_sect(dir / "bad.sect"), IoError);
    }
    SUBCASE("truncated payload") {
        auto bytes = [&] {
            std::ifstream is(dir / "good.sect", std::ios::binary);
            return std::string(std::istreambuf_iterator<char>(is), {});
        }();
        std::ofstream os(dir / "trunc.sect", std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 3));
        os.close();
        CHECK_THROWS_AS(read_sect(dir / "trunc.sect"), IoError);
    }
    SUBCASE("trailing bytes") {
        fs::copy_file(dir / "good.sect", dir / "extra.sect");
        std::ofstream os(dir / "extra.sect", std::ios::binary | std::ios::app);
        os << "x";
        os.close();
        CHECK_THROWS_AS(read_sect(dir / "extra.sect"), IoError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_sect(dir / "nothere.sect"), IoError);
    }
}

TEST_CASE("scalar map and field tensor conversions preserve shape and values") {
    ScalarMap m(2, 3);
    for (int i = 0; i < 6; ++i) m.data[i] = i * 0.25;
    ScalarMap m2 = scalar_map_from_tensor(to_tensor(m));
    CHECK(m2.height == 2);
    CHECK(m2.width == 3);
    for (int i = 0; i < 6; ++i) CHECK(m2.data[i] == doctest::Approx(m.data[i]));

    Field f(2, 2, 3);
    for (size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<double>(i) / 16.0;
    Field f2 = field_from_tensor(to_tensor(f));
    CHECK(f2.same_shape(f));
    for (size_t i = 0; i < f.data.size(); ++i) CHECK(f2.data[i] == doctest::Approx(f.data[i]));

    CHECK_THROWS_AS(scalar_map_from_tensor(to_tensor(f)), IoError);
    CHECK_THROWS_AS(field_from_tensor(to_tensor(m)), IoError);
}

TEST_CASE("PPM round-trips byte-identically after one quantization") {
    fs::path dir = temp_dir("ppm");
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Image img(5, 7);
    for (auto& v : img.data) v = dist(rng);

    write_ppm(dir / "a.ppm", img);
    Image back = read_ppm(dir / "a.ppm");
    write_ppm(dir / "b.ppm", back);

    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(is), {});
    };
    CHECK(slurp(dir / "a.ppm") == slurp(dir / "b.ppm"));
    CHECK(back.height == 5);
    CHECK(back.width == 7);
}

TEST_CASE("PGM masks and cue masks round-trip exactly") {
    fs::path dir = temp_dir("pgm");
    SegMask m(3, 4);
    for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = static_cast<int>(i % 4);
    write_pgm(dir / "m.pgm", m);
    SegMask back = read_pgm(dir / "m.pgm");
    CHECK(back.data == m.data);

    CueMask cues(3, 4);
    cues.at(0, 0) = 1;
    cues.at(2, 3) = 0;
    write_cue_pgm(dir / "c.pgm", cues);
    CueMask cback = read_cue_pgm(dir / "c.pgm");
    CHECK(cback.data == cues.data);
    CHECK(cback.at(1, 1) == kUnlabeled);
}

TEST_CASE("PGM reader tolerates header comments") {
    fs::path dir = temp_dir("pgm-comment");
    std::ofstream os(dir / "c.pgm", std::ios::binary);
    os << "P5\n# a comment\n2 1\n255\n";
    os.put(3);
    os.put(0);
    os.close();
    SegMask m = read_pgm(dir / "c.pgm");
    CHECK(m.width == 2);
    CHECK(m.height == 1);
    CHECK(m.at(0, 0) == 3);
}

TEST_CASE("toy preset holds the documented defaults") {
    RunConfig cfg = RunConfig::toy();
    CHECK(cfg.train.iterations == 1500);
    CHECK(cfg.train.batch_size == 8);
    CHECK(cfg.train.lr0 == doctest::Approx(0.01));
    CHECK(cfg.train.lr_drop_factor == doctest::Approx(0.1));
    CHECK(cfg.train.lr_drop_every == 600);
    CHECK(cfg.train.weight_decay == doctest::Approx(5e-4));
    CHECK(cfg.train.momentum == doctest::Approx(0.9));
    CHECK(cfg.train.terms.seed);
    CHECK(cfg.train.terms.expand);
    CHECK(cfg.train.terms.constrain);
    CHECK(cfg.net.output_stride == 2);
    // Training-time CRF is deliberately mild: one mean-field sweep of a
    // short-range, low-weight kernel.
    CHECK(cfg.train.crf.spatial_scale == doctest::Approx(40.0));
    CHECK(cfg.train.crf.appearance_weight == doctest::Approx(2.0));
    CHECK(cfg.train.crf.iterations == 1);
    CHECK(cfg.infer_crf.spatial_scale == doctest::Approx(1.0));
    CHECK(cfg.synth.heatmap_sigma == doctest::Approx(1.5));
    // Decay rates are feasibility-solved at the 16x16 score grid;
    // background uses plain GAP.
    CHECK(cfg.train.decay.d_minus == 0.0);
    CHECK(cfg.train.decay.d_plus > 0.8);
    CHECK(cfg.train.decay.d_plus < 1.0);
    CHECK(cfg.train.decay.d_bg == doctest::Approx(1.0));
}

TEST_CASE("paper-schedule preset holds the published schedule") {
    RunConfig cfg = RunConfig::paper_schedule();
    CHECK(cfg.train.iterations == 8000);
    CHECK(cfg.train.batch_size == 15);
    CHECK(cfg.train.lr0 == doctest::Approx(0.001));
    CHECK(cfg.train.lr_drop_every == 2000);
    CHECK(cfg.train.weight_decay == doctest::Approx(0.0005));
    CHECK(cfg.train.decay.d_plus == doctest::Approx(0.996));
    CHECK(cfg.train.decay.d_minus == 0.0);
    CHECK(cfg.train.decay.d_bg == doctest::Approx(0.999));
    CHECK(cfg.train.crf.spatial_scale == doctest::Approx(12.0));
    CHECK(cfg.train.crf.appearance_weight == doctest::Approx(10.0));
    CHECK(cfg.train.crf.appearance_spatial_sigma == doctest::Approx(80.0));
    CHECK(cfg.train.crf.appearance_color_sigma == doctest::Approx(13.0));
    CHECK(cfg.train.crf.smoothness_weight == doctest::Approx(3.0));
    CHECK(cfg.train.crf.smoothness_sigma == doctest::Approx(3.0));
}

TEST_CASE("run config parsing rejects unknown keys at every level") {
    CHECK_THROWS_AS(parse_run_config(json{{"presett", "toy"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"train", {{"learning_rate", 0.1}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"train", {{"decay", {{"d", 0.5}}}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"train", {{"crf", {{"w1", 1.0}}}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"synth", {{"shapes", 2}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"preset", "fast"}}), ConfigError);
}

TEST_CASE("run config parsing rejects invalid values") {
    CHECK_THROWS_AS(parse_run_config(json{{"train", {{"batch_size", 0}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"train", {{"momentum", 1.0}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"train", {{"decay", {{"d_plus", 1.5}}}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"train", {{"terms", {"seed", "blur"}}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"net", {{"classes", 1}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"synth", {{"max_shapes", 9}}}}), ConfigError);
}

TEST_CASE("run config overrides take effect") {
    json doc = {{"preset", "toy"},
                {"train", {{"iterations", 10}, {"terms", {"seed", "constrain"}},
                           {"pooling", "gap"}}},
                {"synth", {{"image_size", 16}}}};
    RunConfig cfg = parse_run_config(doc);
    CHECK(cfg.train.iterations == 10);
    CHECK(cfg.train.terms.seed);
    CHECK_FALSE(cfg.train.terms.expand);
    CHECK(cfg.train.terms.constrain);
    CHECK(cfg.train.pooling == PoolingMode::Gap);
    CHECK(cfg.synth.image_size == 16);
}

TEST_CASE("pooling mode string conversions") {
    CHECK(pooling_mode_from_string("gmp") == PoolingMode::Gmp);
    CHECK(pooling_mode_from_string("gap") == PoolingMode::Gap);
    CHECK(pooling_mode_from_string("gwrp") == PoolingMode::Gwrp);
    CHECK(to_string(PoolingMode::Gmp) == "gmp");
    CHECK_THROWS_AS(pooling_mode_from_string("max"), ConfigError);
}

TEST_CASE("checkpoints round-trip architecture and weights") {
    fs::path dir = temp_dir("ckpt");
    NetConfig config = NetConfig::toy(4);
    NetParams params = init_params(config, 17);
    save_checkpoint(dir / "model", config, params);

    auto [config2, params2] = load_checkpoint(dir / "model");
    CHECK(config2.classes == config.classes);
    CHECK(config2.output_stride == config.output_stride);
    REQUIRE(config2.layers.size() == config.layers.size());
    REQUIRE(params2.convs.size() == params.convs.size());
    for (size_t i = 0; i < params.convs.size(); ++i) {
        REQUIRE(params2.convs[i].w.size() == params.convs[i].w.size());
        for (size_t j = 0; j < params.convs[i].w.size(); ++j)
            CHECK(params2.convs[i].w[j] ==
                  doctest::Approx(params.convs[i].w[j]).epsilon(1e-6));
        for (size_t j = 0; j < params.convs[i].b.size(); ++j)
            CHECK(params2.convs[i].b[j] ==
                  doctest::Approx(params.convs[i].b[j]).epsilon(1e-6));
    }
}

TEST_CASE("checkpoint loading rejects mismatched tensor shapes") {
    fs::path dir = temp_dir("ckpt-bad");
    NetConfig config = NetConfig::toy(4);
    NetParams params = init_params(config, 17);
    save_checkpoint(dir / "model", config, params);

    TensorData w = read_sect(dir / "model" / "conv0_w.sect");
    w.values.pop_back();
    w.dims.back() -= 1;
    write_sect(dir / "model" / "conv0_w.sect", w);
    CHECK_THROWS_AS(load_checkpoint(dir / "model"), IoError);
}

TEST_CASE("missing checkpoint manifest is reported") {
    fs::path dir = temp_dir("ckpt-missing");
    CHECK_THROWS_AS(load_checkpoint(dir / "nope"), IoError);
}
