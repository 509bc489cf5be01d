#include "sec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sec {

double lr_at(const TrainConfig& config, int iteration) {
    if (iteration < 0) throw FieldError("lr_at: negative iteration");
    return config.lr0 * std::pow(config.lr_drop_factor, iteration / config.lr_drop_every);
}

DecayParams effective_decay(const TrainConfig& config) {
    DecayParams d = config.decay;
    switch (config.pooling) {
        case PoolingMode::Gmp: d.d_plus = 0.0; break;
        case PoolingMode::Gap: d.d_plus = 1.0; break;
        case PoolingMode::Gwrp: break;
    }
    return d;
}

std::pair<NetParams, TrainLog> train(const std::vector<TrainSample>& dataset,
                                     const NetConfig& net_config,
                                     const TrainConfig& train_config) {
    if (dataset.empty()) throw FieldError("train: empty dataset");
    net_config.validate();
    train_config.crf.validate();

    const DecayParams decay = effective_decay(train_config);
    NetParams params = init_params(net_config, train_config.rng_seed);
    NetGrads velocity = zero_grads(net_config);

    std::mt19937_64 sample_rng(train_config.rng_seed);
    std::mt19937_64 dropout_rng(train_config.rng_seed + 0x5D49E3F1ULL);

    // Per-sample caches that are constant across iterations: the image
    // downscaled to mask resolution and, when the constrain term is on,
    // the pairwise CRF kernel of that downscaled image.
    const int stride = net_config.output_stride;
    std::vector<Image> small_images;
    std::vector<PairwiseKernel> kernels;
    small_images.reserve(dataset.size());
    for (const auto& s : dataset) {
        Image small = resize_image(s.image, s.image.height / stride, s.image.width / stride);
        if (train_config.terms.constrain)
            kernels.push_back(precompute_kernel(small, train_config.crf));
        small_images.push_back(std::move(small));
    }

    std::vector<int> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    size_t cursor = order.size();  // forces a shuffle on first use

    TrainLog log;
    log.records.reserve(train_config.iterations);

    for (int it = 0; it < train_config.iterations; ++it) {
        const double lr = lr_at(train_config, it);

        NetGrads batch_grads = zero_grads(net_config);
        TrainRecord rec;
        rec.iteration = it;
        rec.lr = lr;

        for (int b = 0; b < train_config.batch_size; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), sample_rng);
                cursor = 0;
            }
            const int si = order[cursor++];
            const TrainSample& sample = dataset[si];

            ForwardCache cache;
            ScoreField scores =
                forward(net_config, params, sample.image, /*train_mode=*/true, dropout_rng, &cache);
            ProbField probs = softmax(scores);
            if (sample.cues.height != probs.height || sample.cues.width != probs.width)
                throw FieldError("train: cue mask resolution does not match the network output");

            LossReport loss = sec_loss(
                small_images[si], probs, sample.labels, sample.cues, decay, train_config.crf,
                train_config.terms,
                train_config.terms.constrain ? &kernels[si] : nullptr);
            if (!std::isfinite(loss.total))
                throw TrainAbort(it, "non-finite loss at iteration " + std::to_string(it));

            rec.seed_loss += loss.seed_loss;
            rec.expand_loss += loss.expand_loss;
            rec.constrain_loss += loss.constrain_loss;

            GradField dscores = softmax_backward(probs, loss.grad_probs);
            NetGrads g = backward(net_config, params, cache, dscores);
            for (size_t l = 0; l < g.convs.size(); ++l) {
                for (size_t i = 0; i < g.convs[l].w.size(); ++i)
                    batch_grads.convs[l].w[i] += g.convs[l].w[i];
                for (size_t i = 0; i < g.convs[l].b.size(); ++i)
                    batch_grads.convs[l].b[i] += g.convs[l].b[i];
            }
        }

        const double inv_batch = 1.0 / train_config.batch_size;
        rec.seed_loss *= inv_batch;
        rec.expand_loss *= inv_batch;
        rec.constrain_loss *= inv_batch;
        rec.total = rec.seed_loss + rec.expand_loss + rec.constrain_loss;
        log.records.push_back(rec);

        // Momentum SGD with additive weight decay on the averaged gradient.
        for (size_t l = 0; l < params.convs.size(); ++l) {
            auto& p = params.convs[l];
            auto& v = velocity.convs[l];
            auto& g = batch_grads.convs[l];
            for (size_t i = 0; i < p.w.size(); ++i) {
                const double grad = g.w[i] * inv_batch + train_config.weight_decay * p.w[i];
                v.w[i] = train_config.momentum * v.w[i] + grad;
                p.w[i] -= lr * v.w[i];
                if (!std::isfinite(p.w[i]))
                    throw TrainAbort(it, "non-finite weight at iteration " + std::to_string(it));
            }
            for (size_t i = 0; i < p.b.size(); ++i) {
                const double grad = g.b[i] * inv_batch + train_config.weight_decay * p.b[i];
                v.b[i] = train_config.momentum * v.b[i] + grad;
                p.b[i] -= lr * v.b[i];
            }
        }
    }
    return {std::move(params), std::move(log)};
}

}  // namespace sec
