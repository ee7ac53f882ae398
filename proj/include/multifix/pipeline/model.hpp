#pragma once

#include "multifix/nn/adam.hpp"
#include "multifix/nn/checkpoint.hpp"
#include "multifix/nn/losses.hpp"
#include "multifix/nn/sequence.hpp"
#include "multifix/pipeline/config.hpp"
#include "multifix/synth/dataset.hpp"

namespace multifix::pipeline {

using nn::Mode;
using nn::Sequence;
using nn::Tensor;

// Composed model: per-modality feature-inducing blocks whose sigmoid
// bottlenecks expose the intermediate features I_1..I_nI and T_1..T_nT, plus
// a fusion MLP over their concatenation.
struct PipelineModel {
    Sequence image_block;
    Sequence tabular_block;
    Sequence fusion_block;
    int nI = 1, nT = 1, n_classes = 2;
    int encoder_layers = 0;  // prefix of image_block owned by a pre-trained encoder
    int gradcam_layer = 1;   // activation used for Grad-CAM (output of first conv block)
};

// conv trunk shared by the image block and the autoencoder encoder
inline void add_conv_trunk(Sequence& s, const std::vector<int>& channels) {
    int in = 3;
    for (int ch : channels) {
        s.emplace<nn::Conv2d>(in, ch, 3, 1, 1, nn::Init::kaiming_uniform);
        s.emplace<nn::Relu>();
        s.emplace<nn::MaxPool2d>(2, 2);
        in = ch;
    }
}

inline int conv_trunk_out(const std::vector<int>& channels, int h, int w) {
    for (size_t i = 0; i < channels.size(); ++i) {
        h /= 2;
        w /= 2;
    }
    return channels.back() * h * w;
}

inline Sequence build_image_block(const PipelineConfig& cfg, int h, int w) {
    Sequence s;
    add_conv_trunk(s, cfg.conv_channels);
    s.emplace<nn::Flatten>();
    s.emplace<nn::Dense>(conv_trunk_out(cfg.conv_channels, h, w), cfg.nI, nn::Init::xavier_uniform);
    s.emplace<nn::Sigmoid>();
    return s;
}

inline Sequence build_tabular_block(const PipelineConfig& cfg, int n_features, int out_width) {
    Sequence s;
    int in = n_features;
    for (int hdim : cfg.tab_hidden) {
        s.emplace<nn::Dense>(in, hdim, nn::Init::kaiming_uniform);
        s.emplace<nn::Relu>();
        in = hdim;
    }
    s.emplace<nn::Dense>(in, out_width, nn::Init::xavier_uniform);
    s.emplace<nn::Sigmoid>();
    return s;
}

inline Sequence build_fusion_block(const FusionSpec& spec, int in_width, int n_classes) {
    spec.validate();
    Sequence s;
    int in = in_width;
    for (size_t i = 0; i < spec.widths.size(); ++i) {
        bool relu = spec.activation == "relu";
        s.emplace<nn::Dense>(in, spec.widths[i], relu ? nn::Init::kaiming_uniform : nn::Init::xavier_uniform);
        if (relu) s.emplace<nn::Relu>();
        else s.emplace<nn::Sigmoid>();
        if (spec.dropouts[i] > 0.0f) s.emplace<nn::Dropout>(spec.dropouts[i]);
        in = spec.widths[i];
    }
    s.emplace<nn::Dense>(in, n_classes, nn::Init::xavier_uniform);
    return s;
}

inline PipelineModel assemble(const PipelineConfig& cfg, int img_h, int img_w, int n_tab_features) {
    cfg.validate();
    PipelineModel m;
    m.nI = cfg.nI;
    m.nT = cfg.nT;
    m.n_classes = cfg.n_classes;
    m.image_block = build_image_block(cfg, img_h, img_w);
    m.tabular_block = build_tabular_block(cfg, n_tab_features, cfg.nT);
    m.fusion_block = build_fusion_block(cfg.fusion, cfg.nI + cfg.nT, cfg.n_classes);
    m.image_block.init_params(rng_stream(cfg.seed, {0x101}));
    m.tabular_block.init_params(rng_stream(cfg.seed, {0x102}));
    m.fusion_block.init_params(rng_stream(cfg.seed, {0x103}));
    return m;
}

// ---------------------------------------------------------------------------
// dataset <-> tensor plumbing
// ---------------------------------------------------------------------------

// gathers a batch as [N,3,H,W] images (HWC -> CHW) and [N,F] tabular rows
struct Batch {
    Tensor images;
    Tensor tabs;
    std::vector<int> labels;
};

inline Batch make_batch(const synth::MultimodalDataset& ds, const std::vector<int>& idx) {
    int n = static_cast<int>(idx.size());
    int h = ds.image_h(), w = ds.image_w(), f = ds.tab_features();
    Batch b;
    b.images = Tensor({n, 3, h, w});
    b.tabs = Tensor({n, f});
    for (int i = 0; i < n; ++i) {
        const auto& im = ds.images[static_cast<size_t>(idx[static_cast<size_t>(i)])].img;
        float* dst = b.images.data.data() + static_cast<size_t>(i) * 3 * h * w;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    dst[(static_cast<size_t>(c) * h + y) * w + x] = im.pix[(static_cast<size_t>(y) * w + x) * 3 + c];
        const auto& tf = ds.tabs[static_cast<size_t>(idx[static_cast<size_t>(i)])].features;
        std::copy(tf.begin(), tf.end(), b.tabs.data.begin() + static_cast<size_t>(i) * f);
        b.labels.push_back(ds.labels[static_cast<size_t>(idx[static_cast<size_t>(i)])]);
    }
    return b;
}

// ground-truth feature bits as raw {0,1} block outputs (the pre-extracted
// "I"/"T" inputs of the degradation matrix)
inline Tensor truth_feature_tensor(const synth::MultimodalDataset& ds, const std::vector<int>& idx, bool image_side) {
    auto names = image_side ? synth::image_feature_names(ds.problem) : synth::tabular_feature_names(ds.problem);
    int n = static_cast<int>(idx.size()), f = static_cast<int>(names.size());
    Tensor t({n, f});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j) {
            const auto& truth = image_side ? ds.images[static_cast<size_t>(idx[static_cast<size_t>(i)])].truth
                                           : ds.tabs[static_cast<size_t>(idx[static_cast<size_t>(i)])].truth;
            t.data[static_cast<size_t>(i) * f + j] = static_cast<float>(truth.at(names[static_cast<size_t>(j)]));
        }
    return t;
}

inline Tensor concat_features(const Tensor& a, const Tensor& b) {
    int n = a.shape[0], fa = a.shape[1], fb = b.shape[1];
    Tensor out({n, fa + fb});
    for (int i = 0; i < n; ++i) {
        std::copy(a.data.begin() + static_cast<size_t>(i) * fa, a.data.begin() + static_cast<size_t>(i + 1) * fa,
                  out.data.begin() + static_cast<size_t>(i) * (fa + fb));
        std::copy(b.data.begin() + static_cast<size_t>(i) * fb, b.data.begin() + static_cast<size_t>(i + 1) * fb,
                  out.data.begin() + static_cast<size_t>(i) * (fa + fb) + fa);
    }
    return out;
}

inline std::pair<Tensor, Tensor> split_features(const Tensor& g, int fa, int fb) {
    int n = g.shape[0];
    Tensor a({n, fa}), b({n, fb});
    for (int i = 0; i < n; ++i) {
        std::copy(g.data.begin() + static_cast<size_t>(i) * (fa + fb),
                  g.data.begin() + static_cast<size_t>(i) * (fa + fb) + fa, a.data.begin() + static_cast<size_t>(i) * fa);
        std::copy(g.data.begin() + static_cast<size_t>(i) * (fa + fb) + fa,
                  g.data.begin() + static_cast<size_t>(i + 1) * (fa + fb), b.data.begin() + static_cast<size_t>(i) * fb);
    }
    return {std::move(a), std::move(b)};
}

inline std::vector<int> argmax_rows(const Tensor& logits) {
    int n = logits.shape[0], c = logits.shape[1];
    std::vector<int> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const float* row = logits.data.data() + static_cast<size_t>(i) * c;
        out[static_cast<size_t>(i)] = static_cast<int>(std::max_element(row, row + c) - row);
    }
    return out;
}

// model checkpoint directory: one MFIX1 container per block + model.json
inline void save_pipeline(const PipelineModel& m, const std::string& dir) {
    std::filesystem::create_directories(dir);
    nn::save_checkpoint(m.image_block, dir + "/image_block.mfix");
    nn::save_checkpoint(m.tabular_block, dir + "/tabular_block.mfix");
    nn::save_checkpoint(m.fusion_block, dir + "/fusion_block.mfix");
    nlohmann::json j{{"nI", m.nI},
                     {"nT", m.nT},
                     {"n_classes", m.n_classes},
                     {"encoder_layers", m.encoder_layers},
                     {"gradcam_layer", m.gradcam_layer}};
    std::ofstream os(dir + "/model.json");
    os << j.dump(2) << "\n";
}

inline PipelineModel load_pipeline(const std::string& dir) {
    if (!std::filesystem::exists(dir + "/model.json"))
        throw DataError("model: '" + dir + "' does not contain a pipeline checkpoint");
    PipelineModel m;
    m.image_block = nn::load_checkpoint(dir + "/image_block.mfix");
    m.tabular_block = nn::load_checkpoint(dir + "/tabular_block.mfix");
    m.fusion_block = nn::load_checkpoint(dir + "/fusion_block.mfix");
    nlohmann::json j;
    std::ifstream is(dir + "/model.json");
    is >> j;
    m.nI = j.at("nI");
    m.nT = j.at("nT");
    m.n_classes = j.at("n_classes");
    m.encoder_layers = j.at("encoder_layers");
    m.gradcam_layer = j.at("gradcam_layer");
    return m;
}

}  // namespace multifix::pipeline
