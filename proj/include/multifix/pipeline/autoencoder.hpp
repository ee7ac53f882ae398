#pragma once

#include "multifix/pipeline/model.hpp"

namespace multifix::pipeline {

struct AutoencoderResult {
    Sequence encoder;  // conv trunk + flatten + dense -> linear latent
    Sequence decoder;
    double final_mse = 0.0;
    double mean_image_mse = 0.0;  // baseline: predicting the train-mean image
};

inline Sequence build_encoder(const PipelineConfig& cfg, int h, int w) {
    Sequence enc;
    add_conv_trunk(enc, cfg.conv_channels);
    enc.emplace<nn::Flatten>();
    enc.emplace<nn::Dense>(conv_trunk_out(cfg.conv_channels, h, w), cfg.ae_latent, nn::Init::xavier_uniform);
    return enc;
}

inline Sequence build_decoder(const PipelineConfig& cfg, int h, int w) {
    size_t levels = cfg.conv_channels.size();
    int fh = h >> levels, fw = w >> levels;
    int c_top = cfg.conv_channels.back();
    Sequence dec;
    dec.emplace<nn::Dense>(cfg.ae_latent, c_top * fh * fw, nn::Init::kaiming_uniform);
    dec.emplace<nn::Relu>();
    dec.emplace<nn::Reshape>(std::vector<int>{c_top, fh, fw});
    for (int i = static_cast<int>(levels) - 1; i >= 0; --i) {
        int cin = cfg.conv_channels[static_cast<size_t>(i)];
        int cout = i > 0 ? cfg.conv_channels[static_cast<size_t>(i - 1)] : 3;
        dec.emplace<nn::Upsample2d>(2);
        dec.emplace<nn::Conv2d>(cin, cout, 3, 1, 1,
                                i > 0 ? nn::Init::kaiming_uniform : nn::Init::xavier_uniform);
        if (i > 0) dec.emplace<nn::Relu>();
    }
    return dec;
}

// Unsupervised reconstruction pretraining of the image encoder on the
// training-fold images. The latent is linear; the decoder mirrors the conv
// trunk with nearest-neighbour upsampling.
inline AutoencoderResult pretrain_autoencoder(const synth::MultimodalDataset& ds, const std::vector<int>& train_idx,
                                              const PipelineConfig& cfg, uint64_t seed) {
    int h = ds.image_h(), w = ds.image_w();
    size_t levels = cfg.conv_channels.size();
    if ((h >> levels) << levels != h || (w >> levels) << levels != w)
        throw ConfigError("autoencoder: image size " + std::to_string(h) + "x" + std::to_string(w) +
                          " must be divisible by " + std::to_string(1 << levels));
    AutoencoderResult res;
    res.encoder = build_encoder(cfg, h, w);
    res.decoder = build_decoder(cfg, h, w);
    res.encoder.init_params(rng_stream(seed, {0xae1}));
    res.decoder.init_params(rng_stream(seed, {0xae2}));

    std::vector<nn::Param> params;
    for (auto& p : res.encoder.parameters()) params.push_back({"ae.encoder." + p.name, p.value});
    for (auto& p : res.decoder.parameters()) params.push_back({"ae.decoder." + p.name, p.value});
    nn::Adam opt(params, cfg.ae_lr, 0.0f);

    // baseline: mean training image
    {
        std::vector<double> mean(static_cast<size_t>(3 * h * w), 0.0);
        Batch all = make_batch(ds, train_idx);
        int n = static_cast<int>(train_idx.size());
        for (int i = 0; i < n; ++i)
            for (size_t k = 0; k < mean.size(); ++k)
                mean[k] += all.images.data[static_cast<size_t>(i) * mean.size() + k];
        for (auto& v : mean) v /= n;
        double err = 0.0;
        for (int i = 0; i < n; ++i)
            for (size_t k = 0; k < mean.size(); ++k) {
                double d = all.images.data[static_cast<size_t>(i) * mean.size() + k] - mean[k];
                err += d * d;
            }
        res.mean_image_mse = err / (static_cast<double>(n) * static_cast<double>(mean.size()));
    }

    Rng shuffle_rng(rng_stream(seed, {0xae3}));
    std::vector<int> order = train_idx;
    for (int epoch = 0; epoch < cfg.ae_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double total = 0.0;
        int batches = 0;
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch_size)) {
            std::vector<int> idx(order.begin() + static_cast<long>(off),
                                 order.begin() + static_cast<long>(std::min(off + cfg.batch_size, order.size())));
            Batch b = make_batch(ds, idx);
            Tensor z = res.encoder.forward(b.images, Mode::train);
            Tensor rec = res.decoder.forward(z, Mode::train);
            auto loss = nn::mse_loss(rec, b.images);
            if (!std::isfinite(loss.value))
                throw NumericError("autoencoder: non-finite loss at epoch " + std::to_string(epoch));
            Tensor dz = res.decoder.backward(loss.grad);
            res.encoder.backward(dz);
            opt.step();
            total += loss.value;
            ++batches;
        }
        res.final_mse = total / std::max(batches, 1);
    }
    res.encoder.drop_tape();
    res.decoder.drop_tape();
    return res;
}

}  // namespace multifix::pipeline
