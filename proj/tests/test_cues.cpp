#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sec/cues.hpp"

using namespace sec;

TEST_CASE("fg_cues selects everything in a constant positive heatmap") {
    Heatmap h(3, 3, 0.7);
    CHECK(fg_cues(h).size() == 9);
}

TEST_CASE("fg_cues threshold at 20% of the maximum") {
    Heatmap h(1, 3);
    h.data = {1.0, 0.25, 0.1};
    auto locs = fg_cues(h, 0.2);
    CHECK(locs == std::vector<int>{0, 1});
}

TEST_CASE("fg_cues on an all-zero heatmap is empty") {
    Heatmap h(4, 4, 0.0);
    CHECK(fg_cues(h).empty());
}

TEST_CASE("fg_cues rejects negative entries") {
    Heatmap h(1, 2);
    h.data = {0.5, -0.1};
    CHECK_THROWS_AS(fg_cues(h), FieldError);
}

TEST_CASE("fg_cues is scale invariant") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    Heatmap h(5, 5);
    for (double& v : h.data) v = d(rng);
    Heatmap scaled = h;
    for (double& v : scaled.data) v *= 37.5;
    CHECK(fg_cues(h) == fg_cues(scaled));
}

TEST_CASE("bg_cues tie-break picks lowest location indices on constant saliency") {
    SaliencyMap s(10, 10, 1.0);
    BgCues r = bg_cues(s, 0.1, 3);
    REQUIRE(r.locations.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(r.locations[i] == i);
}

TEST_CASE("median filter removes a single spike before selection") {
    SaliencyMap s(3, 3, 1.0);
    s.at(1, 1) = 100.0;  // spike
    ScalarMap filtered = median_filter(s, 3);
    CHECK(filtered.at(1, 1) == doctest::Approx(1.0));
    // Hand median: corner windows replicate edges, spike appears once of 9.
    for (int u = 0; u < 9; ++u) CHECK(filtered.data[u] == doctest::Approx(1.0));
}

TEST_CASE("bg_cues floor count") {
    SaliencyMap s(2, 2, 1.0);
    BgCues r = bg_cues(s, 0.5, 3);
    CHECK(r.locations.size() == 2);
    CHECK_FALSE(r.empty_warning);
}

TEST_CASE("bg_cues warns when fraction*n < 1") {
    SaliencyMap s(2, 2, 1.0);
    BgCues r = bg_cues(s, 0.1, 3);
    CHECK(r.locations.empty());
    CHECK(r.empty_warning);
}

TEST_CASE("combine_cues keeps disjoint sets verbatim") {
    std::map<int, std::vector<int>> fg = {{1, {0, 1}}, {2, {5}}};
    CueMask m = combine_cues(fg, {8}, 3, 3);
    CHECK(m.data[0] == 1);
    CHECK(m.data[1] == 1);
    CHECK(m.data[5] == 2);
    CHECK(m.data[8] == 0);
    CHECK(m.data[4] == kUnlabeled);
}

TEST_CASE("smaller cue set wins a conflict") {
    std::map<int, std::vector<int>> fg = {{1, {1, 2, 3}}, {2, {2}}};
    CueMask m = combine_cues(fg, {}, 1, 5);
    CHECK(m.data[1] == 1);
    CHECK(m.data[2] == 2);  // class 2 has the smaller set
    CHECK(m.data[3] == 1);
}

TEST_CASE("equal set sizes resolve to the smaller class id") {
    std::map<int, std::vector<int>> fg = {{3, {0}}, {1, {0}}};
    CueMask m = combine_cues(fg, {}, 1, 2);
    CHECK(m.data[0] == 1);
}

TEST_CASE("background never overrides foreground") {
    std::map<int, std::vector<int>> fg = {{2, {3}}};
    CueMask m = combine_cues(fg, {3, 4}, 1, 5);
    CHECK(m.data[3] == 2);
    CHECK(m.data[4] == 0);
}

TEST_CASE("combine_cues output labels stay within bg + given classes + unlabeled") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        std::map<int, std::vector<int>> fg;
        for (int c : {1, 2, 3})
            if (rng() % 2)
                for (int i = 0; i < 6; ++i) fg[c].push_back(static_cast<int>(rng() % 25));
        std::vector<int> bg;
        for (int i = 0; i < 4; ++i) bg.push_back(static_cast<int>(rng() % 25));
        CueMask m = combine_cues(fg, bg, 5, 5);
        for (int v : m.data) {
            bool ok = v == kUnlabeled || v == 0 || fg.count(v);
            CHECK(ok);
        }
    }
}
