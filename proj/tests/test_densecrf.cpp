#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sec/densecrf.hpp"

using namespace sec;

namespace {

ProbField random_probs(int h, int w, int k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    ScoreField s(h, w, k);
    for (double& v : s.data) v = d(rng);
    return softmax(s);
}

// 8x8 constant-color image, unary 60/40 toward class 0 everywhere except
// one dissenting pixel at 40/60.
struct DissentInstance {
    Image image{8, 8, 0.5};
    ProbField unary{8, 8, 2};
    CrfConfig config;

    DissentInstance() {
        for (int u = 0; u < 64; ++u) {
            unary.data[2 * u] = 0.6;
            unary.data[2 * u + 1] = 0.4;
        }
        unary.data[2 * 27] = 0.4;
        unary.data[2 * 27 + 1] = 0.6;
        config.iterations = 5;
        config.appearance_weight = 0.5;
        config.appearance_spatial_sigma = 4.0;
        config.appearance_color_sigma = 13.0;
        config.smoothness_weight = 0.5;
        config.smoothness_sigma = 3.0;
    }
};

}  // namespace

TEST_CASE("zero pairwise weights return the unary field") {
    std::mt19937_64 rng(7);
    ProbField unary = random_probs(4, 5, 3, rng);
    Image img(4, 5, 0.3);
    CrfConfig cfg;
    cfg.appearance_weight = 0.0;
    cfg.smoothness_weight = 0.0;
    ProbField q = mean_field(img, unary, cfg);
    for (size_t i = 0; i < q.data.size(); ++i)
        CHECK(std::abs(q.data[i] - unary.data[i]) < 1e-12);
}

TEST_CASE("zero iterations is the identity") {
    std::mt19937_64 rng(9);
    ProbField unary = random_probs(3, 3, 4, rng);
    Image img(3, 3, 0.5);
    CrfConfig cfg;
    cfg.iterations = 0;
    ProbField q = mean_field(img, unary, cfg);
    CHECK(q.data == unary.data);
}

TEST_CASE("Q stays normalized after every iteration") {
    std::mt19937_64 rng(13);
    ProbField unary = random_probs(6, 6, 3, rng);
    Image img(6, 6);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (double& v : img.data) v = d(rng);
    CrfConfig cfg;
    cfg.spatial_scale = 2.0;
    for (int iters = 1; iters <= 5; ++iters) {
        cfg.iterations = iters;
        ProbField q = mean_field(img, unary, cfg);
        for (int u = 0; u < q.locations(); ++u) {
            double sum = 0.0;
            for (int c = 0; c < q.classes; ++c) sum += q.at(u, c);
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("kernel is symmetric with the self-pair excluded") {
    std::mt19937_64 rng(17);
    Image img(4, 4);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (double& v : img.data) v = d(rng);
    CrfConfig cfg;
    PairwiseKernel k = precompute_kernel(img, cfg);
    for (int u = 0; u < 16; ++u)
        for (int v = u + 1; v < 16; ++v) CHECK(k.at(u, v) == k.at(v, u));
}

TEST_CASE("class relabeling permutes the output identically") {
    std::mt19937_64 rng(19);
    ProbField unary = random_probs(4, 4, 3, rng);
    Image img(4, 4);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (double& v : img.data) v = d(rng);
    CrfConfig cfg;
    cfg.spatial_scale = 2.0;

    const int perm[3] = {2, 0, 1};
    ProbField permuted(4, 4, 3);
    for (int u = 0; u < 16; ++u)
        for (int c = 0; c < 3; ++c) permuted.at(u, perm[c]) = unary.at(u, c);

    ProbField q = mean_field(img, unary, cfg);
    ProbField qp = mean_field(img, permuted, cfg);
    for (int u = 0; u < 16; ++u)
        for (int c = 0; c < 3; ++c)
            CHECK(qp.at(u, perm[c]) == doctest::Approx(q.at(u, c)).epsilon(1e-12));
}

TEST_CASE("dissenting pixel flips to the majority within 5 iterations") {
    DissentInstance inst;
    ProbField q = mean_field(inst.image, inst.unary, inst.config);
    SegMask mask = argmax_mask(q);
    for (int v : mask.data) CHECK(v == 0);
}

TEST_CASE("majority agreement is non-decreasing over iterations") {
    DissentInstance inst;
    int prev = 0;
    for (int iters = 0; iters <= 5; ++iters) {
        CrfConfig cfg = inst.config;
        cfg.iterations = iters;
        SegMask mask = argmax_mask(mean_field(inst.image, inst.unary, cfg));
        int agree = 0;
        for (int v : mask.data)
            if (v == 0) ++agree;
        CHECK(agree >= prev);
        prev = agree;
    }
}

TEST_CASE("refine with zero pairwise equals plain argmax; uniform unary gives class 0") {
    std::mt19937_64 rng(23);
    ProbField unary = random_probs(4, 4, 3, rng);
    Image img(4, 4, 0.5);
    CrfConfig zero;
    zero.appearance_weight = 0.0;
    zero.smoothness_weight = 0.0;
    CHECK(refine(img, unary, zero).data == argmax_mask(unary).data);

    ProbField uniform(4, 4, 4, 0.25);
    SegMask m = refine(img, uniform, CrfConfig{});
    for (int v : m.data) CHECK(v == 0);
}

TEST_CASE("dimension mismatch and invalid config are rejected") {
    ProbField unary(4, 4, 2, 0.5);
    Image img(4, 5, 0.5);
    CHECK_THROWS_AS(mean_field(img, unary, CrfConfig{}), FieldError);
    CrfConfig bad;
    bad.smoothness_sigma = 0.0;
    CHECK_THROWS_AS(mean_field(Image(4, 4, 0.5), unary, bad), FieldError);
}
