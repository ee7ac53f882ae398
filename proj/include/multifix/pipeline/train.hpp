#pragma once

#include "multifix/pipeline/autoencoder.hpp"
#include "multifix/pipeline/metrics.hpp"
#include "multifix/pipeline/model.hpp"

namespace multifix::pipeline {

// Where a modality's features come from during fusion training: the learned
// block, or the generator's ground-truth bits (the pre-extracted "I"/"T"
// inputs of the degradation matrix).
enum class Source { block, truth };

struct TrainHistory {
    std::vector<double> train_loss, val_loss;
};

struct FoldOutcome {
    PipelineModel model;
    TrainHistory history;
    double val_loss = 0.0;
    double val_bacc = 0.0;
    std::vector<int> val_preds;
};

namespace detail {

inline Tensor gather_rows(const Tensor& table, const std::vector<int>& idx) {
    int f = table.shape[1];
    Tensor out({static_cast<int>(idx.size()), f});
    for (size_t i = 0; i < idx.size(); ++i)
        std::copy(table.data.begin() + static_cast<size_t>(idx[i]) * f,
                  table.data.begin() + static_cast<size_t>(idx[i] + 1) * f,
                  out.data.begin() + i * static_cast<size_t>(f));
    return out;
}

inline Tensor head_forward(Sequence& s, int from, const Tensor& in, Mode mode) {
    Tensor cur = in;
    for (int i = from; i < s.size(); ++i) cur = s.layer(i).forward(cur, mode);
    return cur;
}

inline Tensor head_backward(Sequence& s, int from, const Tensor& g) {
    Tensor cur = g;
    for (int i = s.size() - 1; i >= from; --i) cur = s.layer(i).backward(cur);
    return cur;
}

inline std::vector<nn::Param> prefixed(const std::string& prefix, std::vector<nn::Param> ps) {
    for (auto& p : ps) p.name = prefix + p.name;
    return ps;
}

}  // namespace detail

// Shared fusion-model trainer. Covers plain end-to-end training, the
// truth-feature substitutions, and the AE-pretrained encoder with its
// freeze/de-freeze schedule.
inline FoldOutcome train_fusion_fold(const synth::MultimodalDataset& ds, const synth::FoldPlan& plan, int fold,
                                     const PipelineConfig& cfg, Source img_src = Source::block,
                                     Source tab_src = Source::block) {
    cfg.validate();
    std::vector<int> train_idx = plan.train(fold);
    const std::vector<int>& val_idx = plan.test[static_cast<size_t>(fold)];
    uint64_t fold_seed = rng_stream(cfg.seed, {0xf01d, static_cast<uint64_t>(fold)});

    FoldOutcome out;
    int n_img_features = cfg.nI, n_tab_features_out = cfg.nT;
    if (img_src == Source::truth)
        n_img_features = static_cast<int>(synth::image_feature_names(ds.problem).size());
    if (tab_src == Source::truth)
        n_tab_features_out = static_cast<int>(synth::tabular_feature_names(ds.problem).size());

    PipelineModel& m = out.model;
    m.nI = n_img_features;
    m.nT = n_tab_features_out;
    m.n_classes = cfg.n_classes;
    if (img_src == Source::block) {
        if (cfg.ae_pretrain) {
            AutoencoderResult ae = pretrain_autoencoder(ds, train_idx, cfg, rng_stream(fold_seed, {0xaeULL}));
            m.image_block = std::move(ae.encoder);
            m.encoder_layers = m.image_block.size();
            m.image_block.emplace<nn::Dense>(cfg.ae_latent, cfg.nI, nn::Init::xavier_uniform);
            m.image_block.emplace<nn::Sigmoid>();
            Rng head_rng(rng_stream(fold_seed, {0x4ead}));
            m.image_block.layer(m.encoder_layers).init_params(head_rng);
        } else {
            m.image_block = build_image_block(cfg, ds.image_h(), ds.image_w());
            m.image_block.init_params(rng_stream(fold_seed, {0x101}));
        }
    }
    if (tab_src == Source::block) {
        m.tabular_block = build_tabular_block(cfg, ds.tab_features(), cfg.nT);
        m.tabular_block.init_params(rng_stream(fold_seed, {0x102}));
    }
    m.fusion_block = build_fusion_block(cfg.fusion, n_img_features + n_tab_features_out, cfg.n_classes);
    m.fusion_block.init_params(rng_stream(fold_seed, {0x103}));

    // truth-feature tables (raw {0,1}) when a block is bypassed
    Tensor img_truth, tab_truth;
    if (img_src == Source::truth) img_truth = truth_feature_tensor(ds, iota_indices(ds.size()), true);
    if (tab_src == Source::truth) tab_truth = truth_feature_tensor(ds, iota_indices(ds.size()), false);

    int frozen_epochs = 0;
    if (cfg.ae_pretrain && img_src == Source::block) {
        if (cfg.freeze == FreezeMode::defreeze_at) frozen_epochs = cfg.defreeze_epoch;
        if (cfg.freeze == FreezeMode::always_frozen) frozen_epochs = cfg.epochs;
    }

    // cache encoder outputs while the encoder is frozen (it cannot change)
    Tensor enc_cache;
    auto encode_rows = [&](const std::vector<int>& idx) {
        Tensor z({static_cast<int>(idx.size()), cfg.ae_latent});
        for (size_t off = 0; off < idx.size(); off += 64) {
            std::vector<int> chunk(idx.begin() + static_cast<long>(off),
                                   idx.begin() + static_cast<long>(std::min(off + 64, idx.size())));
            Batch b = make_batch(ds, chunk);
            Tensor cur = b.images;
            for (int li = 0; li < m.encoder_layers; ++li) cur = m.image_block.layer(li).forward(cur, Mode::eval);
            std::copy(cur.data.begin(), cur.data.end(), z.data.begin() + static_cast<size_t>(off) * cfg.ae_latent);
        }
        return z;
    };
    if (frozen_epochs > 0) enc_cache = encode_rows(iota_indices(ds.size()));

    // optimizers: the encoder (if any) joins at the de-freeze epoch with its
    // own optimizer; everything else keeps one optimizer throughout
    std::vector<nn::Param> main_params;
    if (img_src == Source::block) {
        // with a freeze schedule the encoder gets its own optimizer later;
        // an unfrozen pre-trained encoder trains with everything else
        int from = (cfg.ae_pretrain && cfg.freeze != FreezeMode::none) ? m.encoder_layers : 0;
        main_params = detail::prefixed("image.", m.image_block.parameters_in_range(from, m.image_block.size()));
    }
    if (tab_src == Source::block)
        for (auto& p : detail::prefixed("tabular.", m.tabular_block.parameters())) main_params.push_back(p);
    for (auto& p : detail::prefixed("fusion.", m.fusion_block.parameters())) main_params.push_back(p);
    nn::Adam opt_main(main_params, cfg.lr, cfg.wd);
    std::unique_ptr<nn::Adam> opt_encoder;

    // forward features for a batch of dataset indices
    auto features_for = [&](const std::vector<int>& idx, const Batch& b, Mode mode, bool frozen_now) {
        Tensor fi, ft;
        if (img_src == Source::truth) {
            fi = detail::gather_rows(img_truth, idx);
        } else if (frozen_now) {
            Tensor z = detail::gather_rows(enc_cache, idx);
            fi = z;
            for (int li = m.encoder_layers; li < m.image_block.size(); ++li)
                fi = m.image_block.layer(li).forward(fi, mode);
        } else {
            fi = m.image_block.forward(b.images, mode);
        }
        ft = tab_src == Source::truth ? detail::gather_rows(tab_truth, idx) : m.tabular_block.forward(b.tabs, mode);
        return std::pair<Tensor, Tensor>{std::move(fi), std::move(ft)};
    };

    auto eval_pass = [&](const std::vector<int>& idx, double* loss_out, std::vector<int>* preds_out) {
        double total = 0.0;
        std::vector<int> preds;
        for (size_t off = 0; off < idx.size(); off += 64) {
            std::vector<int> chunk(idx.begin() + static_cast<long>(off),
                                   idx.begin() + static_cast<long>(std::min(off + 64, idx.size())));
            Batch b = make_batch(ds, chunk);
            auto [fi, ft] = features_for(chunk, b, Mode::eval, false);
            Tensor logits = m.fusion_block.forward(concat_features(fi, ft), Mode::eval);
            auto ce = nn::cross_entropy(logits, b.labels);
            total += static_cast<double>(ce.value) * static_cast<double>(chunk.size());
            auto am = argmax_rows(logits);
            preds.insert(preds.end(), am.begin(), am.end());
        }
        if (loss_out) *loss_out = total / static_cast<double>(idx.size());
        if (preds_out) *preds_out = std::move(preds);
    };

    Rng shuffle_rng(rng_stream(fold_seed, {0x54f1e}));
    std::vector<int> order = train_idx;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        bool frozen_now = epoch < frozen_epochs;
        if (!frozen_now && cfg.ae_pretrain && img_src == Source::block && cfg.freeze == FreezeMode::defreeze_at &&
            !opt_encoder && m.encoder_layers > 0) {
            opt_encoder = std::make_unique<nn::Adam>(
                detail::prefixed("image.encoder.", m.image_block.parameters_in_range(0, m.encoder_layers)), cfg.lr,
                cfg.wd);
        }
        shuffle_rng.shuffle(order);
        double train_total = 0.0;
        int seen = 0;
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch_size)) {
            std::vector<int> idx(order.begin() + static_cast<long>(off),
                                 order.begin() + static_cast<long>(std::min(off + cfg.batch_size, order.size())));
            Batch b = make_batch(ds, idx);
            auto [fi, ft] = features_for(idx, b, Mode::train, frozen_now);
            Tensor fused = concat_features(fi, ft);
            Tensor logits = m.fusion_block.forward(fused, Mode::train);
            auto ce = nn::cross_entropy(logits, b.labels);
            if (!std::isfinite(ce.value))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + " (lr " +
                                   format_float(cfg.lr) + ")");
            Tensor dfused = m.fusion_block.backward(ce.grad);
            auto [di, dt] = split_features(dfused, fi.shape[1], ft.shape[1]);
            if (img_src == Source::block) {
                if (frozen_now) {
                    detail::head_backward(m.image_block, m.encoder_layers, di);
                } else {
                    m.image_block.backward(di);
                }
            }
            if (tab_src == Source::block) m.tabular_block.backward(dt);
            opt_main.step();
            if (opt_encoder && !frozen_now) opt_encoder->step();
            train_total += static_cast<double>(ce.value) * static_cast<double>(idx.size());
            seen += static_cast<int>(idx.size());
        }
        out.history.train_loss.push_back(train_total / seen);
        double vloss = 0.0;
        eval_pass(val_idx, &vloss, nullptr);
        out.history.val_loss.push_back(vloss);
    }

    eval_pass(val_idx, &out.val_loss, &out.val_preds);
    std::vector<int> val_labels;
    for (int i : val_idx) val_labels.push_back(ds.labels[static_cast<size_t>(i)]);
    out.val_bacc = balanced_accuracy(out.val_preds, val_labels, cfg.n_classes);
    return out;
}

// plain end-to-end training (Adam + cross-entropy on the final label only)
inline FoldOutcome train_end_to_end(const synth::MultimodalDataset& ds, const synth::FoldPlan& plan, int fold,
                                    const PipelineConfig& cfg) {
    return train_fusion_fold(ds, plan, fold, cfg, Source::block, Source::block);
}

// ---------------------------------------------------------------------------
// single-modality baseline: the selected block plus a classification head
// ---------------------------------------------------------------------------

struct SingleOutcome {
    Sequence model;
    double val_loss = 0.0;
    double val_bacc = 0.0;
};

inline SingleOutcome train_single_modality(const std::string& modality, const synth::MultimodalDataset& ds,
                                           const synth::FoldPlan& plan, int fold, const PipelineConfig& cfg) {
    cfg.validate();
    bool image = modality == "image";
    if (!image && modality != "tabular") throw ConfigError("single modality must be 'image' or 'tabular'");
    uint64_t fold_seed = rng_stream(cfg.seed, {0x5149, static_cast<uint64_t>(fold)});

    SingleOutcome out;
    Sequence& s = out.model;
    int feat = image ? cfg.nI : cfg.nT;
    if (image) {
        s = build_image_block(cfg, ds.image_h(), ds.image_w());
    } else {
        s = build_tabular_block(cfg, ds.tab_features(), cfg.nT);
    }
    Sequence head = build_fusion_block(cfg.fusion, feat, cfg.n_classes);
    for (int i = 0; i < head.size(); ++i) s.add(head.layer(i).clone());
    s.init_params(fold_seed);

    nn::Adam opt(detail::prefixed(modality + ".", s.parameters()), cfg.lr, cfg.wd);
    std::vector<int> train_idx = plan.train(fold);
    const std::vector<int>& val_idx = plan.test[static_cast<size_t>(fold)];
    Rng shuffle_rng(rng_stream(fold_seed, {0x54f2e}));
    std::vector<int> order = train_idx;

    auto forward_batch = [&](const Batch& b, Mode mode) {
        return s.forward(image ? b.images : b.tabs, mode);
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch_size)) {
            std::vector<int> idx(order.begin() + static_cast<long>(off),
                                 order.begin() + static_cast<long>(std::min(off + cfg.batch_size, order.size())));
            Batch b = make_batch(ds, idx);
            Tensor logits = forward_batch(b, Mode::train);
            auto ce = nn::cross_entropy(logits, b.labels);
            if (!std::isfinite(ce.value))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + " (lr " +
                                   format_float(cfg.lr) + ")");
            s.backward(ce.grad);
            opt.step();
        }
    }

    std::vector<int> preds, labels;
    double total = 0.0;
    for (size_t off = 0; off < val_idx.size(); off += 64) {
        std::vector<int> chunk(val_idx.begin() + static_cast<long>(off),
                               val_idx.begin() + static_cast<long>(std::min(off + 64, val_idx.size())));
        Batch b = make_batch(ds, chunk);
        Tensor logits = forward_batch(b, Mode::eval);
        auto ce = nn::cross_entropy(logits, b.labels);
        total += static_cast<double>(ce.value) * static_cast<double>(chunk.size());
        auto am = argmax_rows(logits);
        preds.insert(preds.end(), am.begin(), am.end());
        labels.insert(labels.end(), b.labels.begin(), b.labels.end());
    }
    out.val_loss = total / static_cast<double>(val_idx.size());
    out.val_bacc = balanced_accuracy(preds, labels, cfg.n_classes);
    return out;
}

// ---------------------------------------------------------------------------
// supervised feature extraction baseline (block trained on truth features)
// ---------------------------------------------------------------------------

struct SupervisedOutcome {
    Sequence block;
    double val_bacc = 0.0;  // macro over features
};

inline SupervisedOutcome train_supervised_feature(const std::string& modality, const synth::MultimodalDataset& ds,
                                                  const synth::FoldPlan& plan, int fold, const PipelineConfig& cfg) {
    cfg.validate();
    bool image = modality == "image";
    if (!image && modality != "tabular") throw ConfigError("supervised modality must be 'image' or 'tabular'");
    auto names = image ? synth::image_feature_names(ds.problem) : synth::tabular_feature_names(ds.problem);
    for (const auto& n : names) {
        const auto& truth = image ? ds.images[0].truth : ds.tabs[0].truth;
        if (!truth.count(n)) throw DataError("supervised training: dataset lacks truth feature '" + n + "'");
    }
    int n_feat = static_cast<int>(names.size());
    uint64_t fold_seed = rng_stream(cfg.seed, {0x50fe, static_cast<uint64_t>(fold)});

    SupervisedOutcome out;
    PipelineConfig block_cfg = cfg;
    block_cfg.nI = n_feat;
    block_cfg.nT = n_feat;
    out.block = image ? build_image_block(block_cfg, ds.image_h(), ds.image_w())
                      : build_tabular_block(block_cfg, ds.tab_features(), n_feat);
    out.block.init_params(fold_seed);

    Tensor truth_all = truth_feature_tensor(ds, iota_indices(ds.size()), image);
    nn::Adam opt(detail::prefixed(modality + ".", out.block.parameters()), cfg.lr, cfg.wd);
    std::vector<int> train_idx = plan.train(fold);
    const std::vector<int>& val_idx = plan.test[static_cast<size_t>(fold)];
    Rng shuffle_rng(rng_stream(fold_seed, {0x54f3e}));
    std::vector<int> order = train_idx;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch_size)) {
            std::vector<int> idx(order.begin() + static_cast<long>(off),
                                 order.begin() + static_cast<long>(std::min(off + cfg.batch_size, order.size())));
            Batch b = make_batch(ds, idx);
            Tensor probs = out.block.forward(image ? b.images : b.tabs, Mode::train);
            auto loss = nn::bce_loss(probs, detail::gather_rows(truth_all, idx));
            if (!std::isfinite(loss.value))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + " (lr " +
                                   format_float(cfg.lr) + ")");
            out.block.backward(loss.grad);
            opt.step();
        }
    }

    // macro-BAcc over features at threshold 0.5
    double macro = 0.0;
    for (int j = 0; j < n_feat; ++j) {
        std::vector<int> preds, labels;
        for (size_t off = 0; off < val_idx.size(); off += 64) {
            std::vector<int> chunk(val_idx.begin() + static_cast<long>(off),
                                   val_idx.begin() + static_cast<long>(std::min(off + 64, val_idx.size())));
            Batch b = make_batch(ds, chunk);
            Tensor probs = out.block.forward(image ? b.images : b.tabs, Mode::eval);
            Tensor truth = detail::gather_rows(truth_all, chunk);
            for (int i = 0; i < probs.shape[0]; ++i) {
                preds.push_back(probs.data[static_cast<size_t>(i) * n_feat + j] > 0.5f ? 1 : 0);
                labels.push_back(static_cast<int>(truth.data[static_cast<size_t>(i) * n_feat + j]));
            }
        }
        macro += balanced_accuracy(preds, labels, 2);
    }
    out.val_bacc = macro / n_feat;
    return out;
}

}  // namespace multifix::pipeline
