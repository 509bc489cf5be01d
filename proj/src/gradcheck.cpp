#include "sec/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "sec/densecrf.hpp"
#include "sec/field.hpp"
#include "sec/losses.hpp"
#include "sec/network.hpp"
#include "sec/pooling.hpp"

namespace sec {

namespace {

constexpr double kH = 1e-5;

double rel_err(double analytic, double fd) {
    const double scale = std::max(std::abs(analytic), std::abs(fd));
    // Central differences carry an absolute cancellation noise of roughly
    // |L| * eps / (2h) ~ 1e-11, so derivatives below ~1e-5 cannot be
    // compared relatively; they are treated as matching zeros. Geometric
    // rank weights routinely decay beneath this floor.
    if (scale < 1e-5) return 0.0;
    return std::abs(analytic - fd) / std::max(scale, 1e-8);
}

// Central difference of a scalar functional with respect to one entry of a
// flat parameter vector.
double central_diff(std::vector<double>& x, size_t i,
                    const std::function<double()>& eval) {
    const double orig = x[i];
    x[i] = orig + kH;
    const double plus = eval();
    x[i] = orig - kH;
    const double minus = eval();
    x[i] = orig;
    return (plus - minus) / (2.0 * kH);
}

ProbField random_prob_field(int h, int w, int k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> score(-2.0, 2.0);
    ScoreField s(h, w, k);
    for (double& v : s.data) v = score(rng);
    return softmax(s);
}

// True at generic points: within every class the sorted values are farther
// apart than the finite-difference step, so a perturbation of h cannot
// change the ranking the analytic gradient was computed for.
bool away_from_rank_ties(const ProbField& f, double margin = 1e-4) {
    for (int c = 0; c < f.classes; ++c) {
        std::vector<double> vals(f.locations());
        for (int u = 0; u < f.locations(); ++u) vals[u] = f.at(u, c);
        std::sort(vals.begin(), vals.end());
        for (size_t j = 1; j < vals.size(); ++j)
            if (vals[j] - vals[j - 1] < margin) return false;
    }
    return true;
}

ProbField random_rank_separated_field(int h, int w, int k, std::mt19937_64& rng) {
    for (;;) {
        ProbField f = random_prob_field(h, w, k, rng);
        if (away_from_rank_ties(f)) return f;
    }
}

Image random_image(int h, int w, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image img(h, w);
    for (double& v : img.data) v = unit(rng);
    return img;
}

CheckResult run_check(const std::string& name, double tolerance, int instances,
                      const std::function<double(std::mt19937_64&)>& one_instance,
                      uint64_t seed) {
    CheckResult r;
    r.name = name;
    r.tolerance = tolerance;
    r.instances = instances;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < instances; ++i)
        r.max_rel_err = std::max(r.max_rel_err, one_instance(rng));
    r.pass = r.max_rel_err < tolerance;
    return r;
}

double check_softmax_instance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> score(-2.0, 2.0), coef(-1.0, 1.0);
    ScoreField s(3, 3, 4);
    for (double& v : s.data) v = score(rng);
    GradField a(3, 3, 4);
    for (double& v : a.data) v = coef(rng);

    auto loss = [&]() {
        ProbField p = softmax(s);
        double L = 0.0;
        for (size_t i = 0; i < p.data.size(); ++i) L += a.data[i] * p.data[i];
        return L;
    };
    GradField analytic = softmax_backward(softmax(s), a);
    double worst = 0.0;
    for (size_t i = 0; i < s.data.size(); ++i)
        worst = std::max(worst, rel_err(analytic.data[i], central_diff(s.data, i, loss)));
    return worst;
}

double check_gwrp_instance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d_dist(0.1, 1.0);
    ProbField f = random_rank_separated_field(4, 4, 3, rng);
    const int cls = static_cast<int>(rng() % 3);
    const double d = d_dist(rng);

    auto loss = [&]() { return gwrp_forward(f, cls, d).score; };
    auto [score, order] = gwrp_forward(f, cls, d);
    GradField analytic = gwrp_backward(order, d, 1.0);
    double worst = 0.0;
    for (size_t i = 0; i < f.data.size(); ++i)
        worst = std::max(worst, rel_err(analytic.data[i], central_diff(f.data, i, loss)));
    return worst;
}

double check_seeding_instance(std::mt19937_64& rng) {
    const int h = 4, w = 4, k = 4;
    ProbField f = random_prob_field(h, w, k, rng);
    CueMask cues(h, w);
    for (int u = 0; u < h * w; ++u)
        if (rng() % 3 == 0) cues.data[u] = static_cast<int>(rng() % k);

    auto loss = [&]() { return seeding_loss(f, cues).loss; };
    GradField analytic = seeding_loss(f, cues).grad;
    double worst = 0.0;
    for (size_t i = 0; i < f.data.size(); ++i)
        worst = std::max(worst, rel_err(analytic.data[i], central_diff(f.data, i, loss)));
    return worst;
}

double check_expansion_instance(std::mt19937_64& rng) {
    const int h = 6, w = 6, k = 4;
    ProbField f = random_rank_separated_field(h, w, k, rng);
    LabelSet labels;
    for (int c = 1; c < k; ++c)
        if (rng() % 2 == 0) labels.present.insert(c);
    DecayParams decay;
    decay.d_plus = 0.9;
    decay.d_minus = 0.3;  // away from 0 so FD and subgradient agree
    decay.d_bg = 0.95;

    auto loss = [&]() { return expansion_loss(f, labels, decay).loss; };
    GradField analytic = expansion_loss(f, labels, decay).grad;
    double worst = 0.0;
    for (size_t i = 0; i < f.data.size(); ++i)
        worst = std::max(worst, rel_err(analytic.data[i], central_diff(f.data, i, loss)));
    return worst;
}

double check_constrain_instance(std::mt19937_64& rng) {
    const int h = 4, w = 4, k = 3;
    ProbField f = random_prob_field(h, w, k, rng);
    Image img = random_image(h, w, rng);
    CrfConfig crf;
    crf.iterations = 3;
    crf.appearance_weight = 0.5;
    crf.smoothness_weight = 0.2;

    // The implemented backward treats Q as a constant, so the oracle is
    // the KL functional with Q frozen at the unperturbed field.
    const ProbField q = mean_field(img, f, crf);
    const int n = h * w;
    auto fixed_q_loss = [&]() {
        double L = 0.0;
        for (size_t i = 0; i < f.data.size(); ++i)
            if (q.data[i] > 0.0) L += q.data[i] * std::log(q.data[i] / f.data[i]);
        return L / n;
    };
    GradField analytic = constrain_loss(img, f, crf).grad;
    double worst = 0.0;
    for (size_t i = 0; i < f.data.size(); ++i)
        worst = std::max(worst, rel_err(analytic.data[i], central_diff(f.data, i, fixed_q_loss)));
    return worst;
}

double check_conv_instance(std::mt19937_64& rng, int stride, int pad, int dilation) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    LayerSpec spec = LayerSpec::conv(3, 2, 3, stride, pad, dilation);
    Tensor3 x(2, 7, 7);
    for (double& v : x.data) v = unit(rng);
    ConvParams p;
    p.w.resize(static_cast<size_t>(spec.out_channels) * spec.in_channels * 9);
    p.b.resize(spec.out_channels);
    for (double& v : p.w) v = unit(rng);
    for (double& v : p.b) v = unit(rng);

    Tensor3 y0 = conv_forward(x, spec, p);
    std::vector<double> a(y0.data.size());
    for (double& v : a) v = unit(rng);

    auto loss = [&]() {
        Tensor3 y = conv_forward(x, spec, p);
        double L = 0.0;
        for (size_t i = 0; i < y.data.size(); ++i) L += a[i] * y.data[i];
        return L;
    };
    Tensor3 dy(y0.channels, y0.height, y0.width);
    dy.data.assign(a.begin(), a.end());
    Tensor3 dx;
    ConvParams dp;
    conv_backward(x, spec, p, dy, &dx, &dp);

    double worst = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i)
        worst = std::max(worst, rel_err(dx.data[i], central_diff(x.data, i, loss)));
    for (size_t i = 0; i < p.w.size(); ++i)
        worst = std::max(worst, rel_err(dp.w[i], central_diff(p.w, i, loss)));
    for (size_t i = 0; i < p.b.size(); ++i)
        worst = std::max(worst, rel_err(dp.b[i], central_diff(p.b, i, loss)));
    return worst;
}

double check_relu_instance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Tensor3 x(2, 4, 4);
    for (double& v : x.data) {
        v = unit(rng);
        if (std::abs(v) < 0.05) v = 0.1;  // keep away from the kink
    }
    std::vector<double> a(x.data.size());
    for (double& v : a) v = unit(rng);

    auto loss = [&]() {
        Tensor3 y = relu_forward(x);
        double L = 0.0;
        for (size_t i = 0; i < y.data.size(); ++i) L += a[i] * y.data[i];
        return L;
    };
    Tensor3 dy = x;
    dy.data.assign(a.begin(), a.end());
    Tensor3 dx = relu_backward(x, dy);
    double worst = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i)
        worst = std::max(worst, rel_err(dx.data[i], central_diff(x.data, i, loss)));
    return worst;
}

double check_dropout_instance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double rate = 0.5;
    Tensor3 x(2, 4, 4);
    for (double& v : x.data) v = unit(rng);
    std::vector<uint8_t> keep(x.data.size());
    for (auto& kb : keep) kb = rng() % 2;
    std::vector<double> a(x.data.size());
    for (double& v : a) v = unit(rng);

    auto loss = [&]() {
        Tensor3 y = dropout_forward(x, rate, keep);
        double L = 0.0;
        for (size_t i = 0; i < y.data.size(); ++i) L += a[i] * y.data[i];
        return L;
    };
    Tensor3 dy = x;
    dy.data.assign(a.begin(), a.end());
    Tensor3 dx = dropout_backward(rate, keep, dy);
    double worst = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i)
        worst = std::max(worst, rel_err(dx.data[i], central_diff(x.data, i, loss)));
    return worst;
}

// Full pipeline with true derivatives end to end: network (eval mode) ->
// softmax -> seeding + expansion losses, differentiated w.r.t. every
// network parameter.
double check_composed_instance(std::mt19937_64& rng) {
    NetConfig cfg;
    cfg.classes = 3;
    cfg.output_stride = 2;
    cfg.layers = {
        LayerSpec::conv(3, 3, 4, 2, 1),
        LayerSpec::relu(),
        LayerSpec::conv(1, 4, 3, 1, 0),
    };

    // Generic-point rejection: a parameter step of h must not flip a rank
    // inside the expansion pooling nor cross a relu kink, so regenerate
    // until hidden pre-activations and per-class rank gaps have margin.
    NetParams params;
    Image img;
    for (;;) {
        params = init_params(cfg, rng());
        // Widen the prediction layer so the class probabilities spread out;
        // near-uniform outputs make separated ranks vanishingly rare.
        for (double& v : params.convs[1].w) v *= 8.0;
        img = random_image(8, 8, rng);
        std::mt19937_64 probe_rng(0);
        ForwardCache probe;
        ScoreField s = forward(cfg, params, img, false, probe_rng, &probe);
        bool generic = away_from_rank_ties(softmax(s), 1e-3);
        for (double v : probe.inputs[1].data)  // input to the relu layer
            if (std::abs(v) < 1e-3) generic = false;
        if (generic) break;
    }
    CueMask cues(4, 4);
    for (int u = 0; u < 16; ++u)
        if (rng() % 3 == 0) cues.data[u] = static_cast<int>(rng() % 3);
    LabelSet labels;
    labels.present.insert(1 + static_cast<int>(rng() % 2));
    DecayParams decay;
    decay.d_plus = 0.9;
    decay.d_minus = 0.3;
    decay.d_bg = 0.95;

    std::mt19937_64 unused(0);
    auto loss = [&]() {
        ProbField p = softmax(forward(cfg, params, img, false, unused));
        return seeding_loss(p, cues).loss + expansion_loss(p, labels, decay).loss;
    };

    ForwardCache cache;
    ScoreField scores = forward(cfg, params, img, false, unused, &cache);
    ProbField probs = softmax(scores);
    GradField dprobs = seeding_loss(probs, cues).grad;
    GradField expand_grad = expansion_loss(probs, labels, decay).grad;
    for (size_t i = 0; i < dprobs.data.size(); ++i) dprobs.data[i] += expand_grad.data[i];
    NetGrads grads = backward(cfg, params, cache, softmax_backward(probs, dprobs));

    double worst = 0.0;
    for (size_t l = 0; l < params.convs.size(); ++l) {
        for (size_t i = 0; i < params.convs[l].w.size(); ++i)
            worst = std::max(worst, rel_err(grads.convs[l].w[i],
                                            central_diff(params.convs[l].w, i, loss)));
        for (size_t i = 0; i < params.convs[l].b.size(); ++i)
            worst = std::max(worst, rel_err(grads.convs[l].b[i],
                                            central_diff(params.convs[l].b, i, loss)));
    }
    return worst;
}

}  // namespace

std::vector<CheckResult> gradcheck_pooling(int instances, uint64_t seed) {
    return {run_check("gwrp_backward", 1e-5, instances, check_gwrp_instance, seed)};
}

std::vector<CheckResult> gradcheck_losses(int instances, uint64_t seed) {
    return {
        run_check("softmax_backward", 1e-6, instances, check_softmax_instance, seed),
        run_check("seeding_loss", 1e-5, instances, check_seeding_instance, seed + 1),
        run_check("expansion_loss", 1e-5, instances, check_expansion_instance, seed + 2),
        run_check("constrain_loss(fixed-Q)", 1e-5, instances, check_constrain_instance, seed + 3),
    };
}

std::vector<CheckResult> gradcheck_network(int instances, uint64_t seed) {
    return {
        run_check("conv(stride1,pad1)", 1e-4, instances,
                  [](std::mt19937_64& rng) { return check_conv_instance(rng, 1, 1, 1); }, seed),
        run_check("conv(stride2,pad1)", 1e-4, instances,
                  [](std::mt19937_64& rng) { return check_conv_instance(rng, 2, 1, 1); }, seed + 1),
        run_check("conv(dilation2,pad2)", 1e-4, instances,
                  [](std::mt19937_64& rng) { return check_conv_instance(rng, 1, 2, 2); }, seed + 2),
        run_check("relu", 1e-4, instances, check_relu_instance, seed + 3),
        run_check("dropout", 1e-4, instances, check_dropout_instance, seed + 4),
        run_check("network+loss composed", 1e-4, instances, check_composed_instance, seed + 5),
    };
}

std::vector<CheckResult> gradcheck_all(int instances, uint64_t seed) {
    std::vector<CheckResult> all;
    for (auto&& group : {gradcheck_pooling(instances, seed), gradcheck_losses(instances, seed),
                         gradcheck_network(instances, seed)})
        all.insert(all.end(), group.begin(), group.end());
    return all;
}

}  // namespace sec
